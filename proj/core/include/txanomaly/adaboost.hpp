#pragma once

#include <span>
#include <string>
#include <vector>

#include "txanomaly/tree.hpp"

namespace txanomaly {

struct AdaBoostParams {
  std::size_t n_rounds = 50;
  std::size_t stump_depth = 1;
};

struct AdaBoostModel {
  std::vector<TreeModel> stumps;
  std::vector<double> alphas;
  std::vector<std::string> feature_names;

  // Alpha-weighted fraction of stumps voting for the positive class.
  double predict(std::span<const double> x) const;
  friend bool operator==(const AdaBoostModel&, const AdaBoostModel&) = default;
};

struct AdaBoostRound {
  double error;
  double alpha;
  double weight_sum_after;  // sum of sample weights after renormalization
};

// ln((1 - err) / err), the two-class SAMME stage weight.
double samme_alpha(double error);

// Two-class SAMME. Stops early when a stump is perfect (it then decides alone)
// or no better than chance. A first-round stump with error >= 0.5 is kept with
// alpha 1 so the model is never empty.
AdaBoostModel fit_adaboost(MatrixView x, std::span<const Label> y, const AdaBoostParams& params,
                           std::vector<std::string> feature_names = {},
                           std::vector<AdaBoostRound>* rounds = nullptr);

}  // namespace txanomaly
