#include <array>
#include <cmath>
#include <random>

#include "txanomaly/dataset.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

namespace {

struct LogNormal {
  double log_median;
  double log_sd;
  bool shifted;  // displaced for the anomalous cluster
};

// indegree, in_btc, out_btc, total_btc, mean_in_btc, mean_out_btc
constexpr std::array<LogNormal, 6> kReducedFeatures = {{
    {0.7, 0.6, false},
    {2.3, 1.2, false},
    {2.3, 1.2, false},
    {3.0, 1.2, true},
    {1.6, 1.0, true},
    {1.4, 1.0, true},
}};

}  // namespace

Dataset gen_synthetic(std::size_t n_major, std::size_t n_minor, double separation,
                      std::uint64_t seed, SyntheticSchema schema) {
  if (n_major < 1 || n_minor < 1) throw InvalidArgument("gen_synthetic needs n_major, n_minor >= 1");
  const std::size_t n = n_major + n_minor;
  const double per_feature_shift = separation / std::sqrt(3.0);

  Rng rng(derive_seed(seed, "synthetic.values"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool paper = schema == SyntheticSchema::kPaper;
  const std::size_t d = paper ? 11 : 6;

  std::vector<double> values;
  values.reserve(n * d);
  std::vector<Label> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = i < n_major ? 0 : 1;
    std::array<double, 6> base{};
    for (std::size_t f = 0; f < kReducedFeatures.size(); ++f) {
      const auto& spec = kReducedFeatures[f];
      double z = normal(rng);
      if (y == 1 && spec.shifted) z += per_feature_shift;
      base[f] = std::exp(spec.log_median + spec.log_sd * z);
    }
    if (!paper) {
      values.insert(values.end(), base.begin(), base.end());
    } else {
      const double outdegree = std::exp(0.7 + 0.6 * normal(rng));
      const double u = uniform_unit(rng);
      const double in_mal = y == 1 ? (u < 0.7 ? 1.0 : 0.0) : (u < 0.001 ? 1.0 : 0.0);
      const double out_mal = y;
      const double is_mal = y;
      const double all_mal = std::max(in_mal, static_cast<double>(y));
      const std::array<double, 11> row = {base[0], outdegree, base[1], base[2], base[3], base[4],
                                          base[5], in_mal,    out_mal, is_mal,  all_mal};
      values.insert(values.end(), row.begin(), row.end());
    }
    labels.push_back(y);
  }

  const auto& full = paper ? paper_schema() : reduced_schema();
  std::vector<std::string> names(full.begin(), full.end() - 1);
  Dataset ordered(std::move(names), std::move(values), std::move(labels));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(seed, "synthetic.order"));
  shuffle_indices(shuffle_rng, order);
  return ordered.subset(order);
}

}  // namespace txanomaly
