#include "txanomaly/logistic.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "txanomaly/boosting.hpp"
#include "txanomaly/error.hpp"

namespace txanomaly {

double LogisticModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) throw InvalidArgument("logistic model dimension mismatch");
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
  return z;
}

double LogisticModel::predict(std::span<const double> x) const { return sigmoid(decision(x)); }

namespace {

double dot_row(std::span<const double> row, std::span<const double> w, double b) {
  double z = b;
  for (std::size_t j = 0; j < row.size(); ++j) z += w[j] * row[j];
  return z;
}

// Unclamped, numerically stable log(1 + exp(-m)) where m = signed margin.
double softplus_neg(double margin) {
  return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

}  // namespace

double logistic_objective(MatrixView x, std::span<const Label> y, std::span<const double> weights,
                          double bias, double l2) {
  const std::size_t n = x.rows();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = dot_row(x.row(i), weights, bias);
    loss += softplus_neg(y[i] ? z : -z);
  }
  double reg = 0.0;
  for (double w : weights) reg += w * w;
  return loss / static_cast<double>(n) + 0.5 * l2 * reg;
}

std::vector<double> logistic_gradient(MatrixView x, std::span<const Label> y,
                                      std::span<const double> weights, double bias, double l2) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    const double r = sigmoid(dot_row(row, weights, bias)) - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < d; ++j) g[j] += r * row[j];
    g[d] += r;
  }
  for (std::size_t j = 0; j <= d; ++j) g[j] /= static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) g[j] += l2 * weights[j];
  return g;
}

LogisticModel fit_logistic(MatrixView x, std::span<const Label> y, const LogisticParams& params) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0 || y.size() != n) throw InvalidArgument("logistic regression needs matching, nonempty input");
  const std::size_t pos = std::accumulate(y.begin(), y.end(), std::size_t{0});
  if (pos == 0 || pos == n) throw InvalidArgument("logistic regression needs both classes");

  LogisticModel m;
  m.weights.assign(d, 0.0);
  double objective = logistic_objective(x, y, m.weights, m.bias, params.l2);
  for (std::size_t it = 0; it < params.max_iters; ++it) {
    const auto g = logistic_gradient(x, y, m.weights, m.bias, params.l2);
    Eigen::Map<const Eigen::VectorXd> grad(g.data(), static_cast<Eigen::Index>(d + 1));
    m.gradient_norm = grad.norm();
    m.iterations = it;
    if (m.gradient_norm < params.tolerance) {
      m.converged = true;
      return m;
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1),
                                              static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(d + 1));
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      const double p = sigmoid(dot_row(row, m.weights, m.bias));
      for (std::size_t j = 0; j < d; ++j) xi[static_cast<Eigen::Index>(j)] = row[j];
      xi[static_cast<Eigen::Index>(d)] = 1.0;
      h.selfadjointView<Eigen::Lower>().rankUpdate(xi, p * (1.0 - p));
    }
    h = h.selfadjointView<Eigen::Lower>();
    h /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += params.l2;
    h(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) += 1e-10;
    const Eigen::VectorXd step = h.ldlt().solve(-grad);
    const double slope = grad.dot(step);

    double t = 1.0;
    bool moved = false;
    std::vector<double> w_try(d);
    for (int k = 0; k < 60; ++k) {
      for (std::size_t j = 0; j < d; ++j) w_try[j] = m.weights[j] + t * step[static_cast<Eigen::Index>(j)];
      const double b_try = m.bias + t * step[static_cast<Eigen::Index>(d)];
      const double obj = logistic_objective(x, y, w_try, b_try, params.l2);
      if (obj <= objective + 1e-4 * t * slope) {
        m.weights = w_try;
        m.bias = b_try;
        objective = obj;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  const auto g = logistic_gradient(x, y, m.weights, m.bias, params.l2);
  double norm = 0.0;
  for (double v : g) norm += v * v;
  m.gradient_norm = std::sqrt(norm);
  m.converged = m.gradient_norm < params.tolerance;
  return m;
}

}  // namespace txanomaly
