#pragma once

// Hand-rolled random generators for property tests.

#include <cstdint>
#include <string>
#include <vector>

#include "txanomaly/dataset.hpp"
#include "txanomaly/random.hpp"

namespace gen {

using txanomaly::Dataset;
using txanomaly::Label;
using txanomaly::Rng;

inline std::vector<std::string> names(std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back("f" + std::to_string(j));
  return out;
}

// Values on a small integer grid (so ties and duplicate rows happen) or
// continuous uniforms. Both classes are guaranteed when n >= 2.
inline Dataset dataset(Rng& rng, std::size_t n, std::size_t d, bool grid, double positive_rate = 0.3) {
  std::vector<double> v(n * d);
  for (auto& x : v) {
    x = grid ? static_cast<double>(txanomaly::uniform_index(rng, 6)) : txanomaly::uniform_unit(rng) * 10.0 - 5.0;
  }
  std::vector<Label> y(n);
  for (auto& l : y) l = txanomaly::uniform_unit(rng) < positive_rate ? 1 : 0;
  if (n >= 2) {
    y[0] = 0;
    y[1] = 1;
  }
  return Dataset(names(d), std::move(v), std::move(y));
}

// Two Gaussian-ish blobs (sum of uniforms) centred `gap` apart on every axis.
inline Dataset blobs(Rng& rng, std::size_t n_neg, std::size_t n_pos, std::size_t d, double gap) {
  std::vector<double> v;
  std::vector<Label> y;
  for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
    const Label c = i < n_neg ? 0 : 1;
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += txanomaly::uniform_unit(rng) - 0.5;
      v.push_back(s + (c ? gap : 0.0));
    }
    y.push_back(c);
  }
  return Dataset(names(d), std::move(v), std::move(y));
}

inline std::vector<double> point(Rng& rng, std::size_t d, double scale = 5.0) {
  std::vector<double> p(d);
  for (auto& x : p) x = (txanomaly::uniform_unit(rng) * 2.0 - 1.0) * scale;
  return p;
}

}  // namespace gen
