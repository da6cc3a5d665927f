#pragma once

#include <span>
#include <string>
#include <vector>

#include "txanomaly/tree.hpp"

namespace txanomaly {

double sigmoid(double z);

// Derivatives of the logistic loss with respect to the raw score.
struct LogisticDerivatives {
  double gradient;  // p - y
  double hessian;   // p (1 - p)
};
LogisticDerivatives logistic_derivatives(double raw_score, Label y);
// -[y log p + (1 - y) log(1 - p)] with p clamped to [1e-12, 1 - 1e-12].
double logistic_loss(double probability, Label y);
double mean_log_loss(std::span<const Label> y, std::span<const double> probabilities);

enum class BoostFlavor { kGradient, kSecondOrder };

struct GBoostParams {
  std::size_t n_stages = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

// Regularized second-order booster (the XGBoost formulation).
struct XgbParams {
  std::size_t n_stages = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

struct BoostedModel {
  BoostFlavor flavor = BoostFlavor::kGradient;
  std::vector<TreeModel> stages;
  double learning_rate = 0.1;
  double base_score = 0.0;  // log-odds of the training prior
  std::vector<std::string> feature_names;

  double raw_score(std::span<const double> x) const;
  // sigmoid(base_score + learning_rate * sum of stage outputs)
  double predict(std::span<const double> x) const { return sigmoid(raw_score(x)); }
  friend bool operator==(const BoostedModel&, const BoostedModel&) = default;
};

// Friedman gradient boosting: stage trees fit the gradients by squared error,
// leaves take the Newton step sum(y - p) / sum(p (1 - p)). When `loss_trace`
// is non-null it receives the training log-loss before the first stage and
// after every stage.
BoostedModel fit_gboost(MatrixView x, std::span<const Label> y, const GBoostParams& params,
                        std::vector<std::string> feature_names = {},
                        std::vector<double>* loss_trace = nullptr);

BoostedModel fit_xgb(MatrixView x, std::span<const Label> y, const XgbParams& params,
                     std::vector<std::string> feature_names = {},
                     std::vector<double>* loss_trace = nullptr);

}  // namespace txanomaly
