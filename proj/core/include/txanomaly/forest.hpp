#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "txanomaly/tree.hpp"

namespace txanomaly {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  std::size_t min_samples_leaf = 1;
  // 0 selects round(sqrt(D)).
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct ForestModel {
  std::vector<TreeModel> trees;
  // Seed each member consumed; derive_seed(params.seed, tree index).
  std::vector<std::uint64_t> bootstrap_seeds;
  std::vector<std::string> feature_names;

  // Mean of member leaf probabilities.
  double predict(std::span<const double> x) const;
  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

ForestModel fit_forest(MatrixView x, std::span<const Label> y, const ForestParams& params,
                       std::vector<std::string> feature_names = {});

}  // namespace txanomaly
