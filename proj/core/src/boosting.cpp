#include "txanomaly/boosting.hpp"

#include <algorithm>
#include <cmath>

#include "txanomaly/error.hpp"

namespace txanomaly {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticDerivatives logistic_derivatives(double raw_score, Label y) {
  const double p = sigmoid(raw_score);
  return {p - static_cast<double>(y), p * (1.0 - p)};
}

double logistic_loss(double probability, Label y) {
  const double p = std::clamp(probability, 1e-12, 1.0 - 1e-12);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

double mean_log_loss(std::span<const Label> y, std::span<const double> probabilities) {
  if (y.size() != probabilities.size() || y.empty()) {
    throw InvalidArgument("log-loss needs equal, nonempty inputs");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += logistic_loss(probabilities[i], y[i]);
  return sum / static_cast<double>(y.size());
}

double BoostedModel::raw_score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& s : stages) sum += s.predict(x);
  return base_score + learning_rate * sum;
}

namespace {

double prior_log_odds(std::span<const Label> y) {
  std::size_t pos = 0;
  for (Label v : y) pos += v;
  if (pos == 0 || pos == y.size()) throw InvalidArgument("boosting needs both classes in y");
  const double p = static_cast<double>(pos) / static_cast<double>(y.size());
  return std::log(p / (1.0 - p));
}

template <typename FitStage>
BoostedModel boost(MatrixView x, std::span<const Label> y, BoostFlavor flavor,
                   std::size_t n_stages, double learning_rate,
                   std::vector<std::string> feature_names, std::vector<double>* loss_trace,
                   FitStage&& fit_stage) {
  if (y.size() != x.rows()) throw InvalidArgument("label count does not match rows");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw InvalidArgument("learning_rate must lie in (0, 1]");
  }
  BoostedModel m;
  m.flavor = flavor;
  m.learning_rate = learning_rate;
  m.base_score = prior_log_odds(y);
  const std::size_t n = x.rows();
  std::vector<double> raw(n, m.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<double> prob(n);

  auto record_loss = [&] {
    if (!loss_trace) return;
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(raw[i]);
    loss_trace->push_back(mean_log_loss(y, prob));
  };
  record_loss();
  for (std::size_t s = 0; s < n_stages; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = logistic_derivatives(raw[i], y[i]);
      grad[i] = d.gradient;
      hess[i] = d.hessian;
    }
    TreeModel stage = fit_stage(grad, hess, feature_names);
    for (std::size_t i = 0; i < n; ++i) raw[i] += learning_rate * stage.predict(x.row(i));
    m.stages.push_back(std::move(stage));
    record_loss();
  }
  m.feature_names = m.stages.empty() ? feature_names : m.stages.front().feature_names;
  if (m.feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) m.feature_names.push_back("f" + std::to_string(j));
  }
  return m;
}

}  // namespace

BoostedModel fit_gboost(MatrixView x, std::span<const Label> y, const GBoostParams& params,
                        std::vector<std::string> feature_names, std::vector<double>* loss_trace) {
  GradientTreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = params.min_samples_leaf;
  const std::vector<double> ones(x.rows(), 1.0);
  return boost(x, y, BoostFlavor::kGradient, params.n_stages, params.learning_rate,
               std::move(feature_names), loss_trace,
               [&](const std::vector<double>& g, const std::vector<double>& h,
                   const std::vector<std::string>& names) {
                 return fit_gradient_tree(x, y, g, ones, h, tp, names);
               });
}

BoostedModel fit_xgb(MatrixView x, std::span<const Label> y, const XgbParams& params,
                     std::vector<std::string> feature_names, std::vector<double>* loss_trace) {
  if (params.lambda < 0.0 || params.gamma < 0.0) {
    throw InvalidArgument("lambda and gamma must be nonnegative");
  }
  GradientTreeParams tp;
  tp.max_depth = params.max_depth;
  tp.lambda = params.lambda;
  tp.gamma = params.gamma;
  tp.min_child_weight = params.min_child_weight;
  tp.leaf_lambda = params.lambda;
  return boost(x, y, BoostFlavor::kSecondOrder, params.n_stages, params.learning_rate,
               std::move(feature_names), loss_trace,
               [&](const std::vector<double>& g, const std::vector<double>& h,
                   const std::vector<std::string>& names) {
                 return fit_gradient_tree(x, y, g, h, h, tp, names);
               });
}

}  // namespace txanomaly
