#pragma once

#include <span>
#include <vector>

#include "txanomaly/dataset.hpp"

namespace txanomaly {

struct LogisticParams {
  std::size_t max_iters = 100;
  double tolerance = 1e-8;
  double l2 = 1e-4;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;

  double decision(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

// mean log-loss + l2/2 * |w|^2 (bias unpenalized).
double logistic_objective(MatrixView x, std::span<const Label> y, std::span<const double> weights,
                          double bias, double l2);
// Gradient of logistic_objective; weights first, bias last.
std::vector<double> logistic_gradient(MatrixView x, std::span<const Label> y,
                                      std::span<const double> weights, double bias, double l2);

// Damped Newton with backtracking. Non-convergence is reported through
// `converged` and `gradient_norm` rather than thrown.
LogisticModel fit_logistic(MatrixView x, std::span<const Label> y, const LogisticParams& params);

}  // namespace txanomaly
