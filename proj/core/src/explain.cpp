#include "txanomaly/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "txanomaly/error.hpp"
#include "txanomaly/parallel.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

double shapley_kernel_weight(std::size_t d, std::size_t s) {
  if (s == 0 || s >= d) throw InvalidArgument("kernel weight is infinite for empty or full coalitions");
  // C(d, s) via lgamma keeps large d finite.
  const double log_c = std::lgamma(static_cast<double>(d) + 1) - std::lgamma(static_cast<double>(s) + 1) -
                       std::lgamma(static_cast<double>(d - s) + 1);
  return static_cast<double>(d - 1) /
         (std::exp(log_c) * static_cast<double>(s) * static_cast<double>(d - s));
}

namespace {

using Coalition = std::vector<char>;

// Mean of f over the background with features outside `z` taken from each
// background row.
double masked_value(const ModelFn& f, std::span<const double> x, MatrixView bg, const Coalition& z,
                    std::vector<double>& buf) {
  // Running mean: exact when every output is the same.
  double mean = 0.0;
  for (std::size_t r = 0; r < bg.rows(); ++r) {
    const auto row = bg.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) buf[j] = z[j] ? x[j] : row[j];
    mean += (f(buf) - mean) / static_cast<double>(r + 1);
  }
  return mean;
}

std::vector<Coalition> all_coalitions(std::size_t d) {
  std::vector<Coalition> out;
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << d); ++mask) {
    Coalition z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = static_cast<char>((mask >> j) & 1U);
    out.push_back(std::move(z));
  }
  return out;
}

// Sizes drawn in proportion to the total kernel mass of each size, members
// uniform within a size; every draw is paired with its complement.
std::vector<Coalition> sampled_coalitions(std::size_t d, std::size_t n, std::uint64_t seed) {
  std::vector<double> mass(d, 0.0);
  for (std::size_t s = 1; s < d; ++s) mass[s] = 1.0 / (static_cast<double>(s) * static_cast<double>(d - s));
  std::discrete_distribution<std::size_t> size_dist(mass.begin(), mass.end());
  Rng rng(seed);
  std::vector<Coalition> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::size_t s = size_dist(rng);
    Coalition z(d, 0);
    for (std::size_t j : sample_without_replacement(rng, d, s)) z[j] = 1;
    Coalition c(d);
    for (std::size_t j = 0; j < d; ++j) c[j] = static_cast<char>(!z[j]);
    out.push_back(std::move(z));
    if (out.size() < n) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

Attribution kernel_shap(const ModelFn& f, std::span<const double> x, MatrixView background,
                        const KernelShapParams& params) {
  const std::size_t d = x.size();
  if (d == 0) throw InvalidArgument("kernel_shap needs at least one feature");
  if (background.rows() == 0) throw InvalidArgument("kernel_shap needs a non-empty background");
  if (background.cols() != d) throw InvalidArgument("background dimension does not match instance");

  Attribution a;
  std::vector<double> buf(d);
  a.fx = f(x);
  a.base_value = masked_value(f, x, background, Coalition(d, 0), buf);
  const double delta = a.fx - a.base_value;
  a.phis.assign(d, 0.0);
  if (d == 1) {
    a.phis[0] = delta;
    return a;
  }

  a.exhaustive = d <= 20 && (std::uint64_t{1} << d) <= params.n_coalitions;
  if (!a.exhaustive && params.n_coalitions < d + 2) {
    throw InsufficientCoalitions("need at least D + 2 = " + std::to_string(d + 2) + " coalitions");
  }
  const auto coalitions = a.exhaustive ? all_coalitions(d) : sampled_coalitions(d, params.n_coalitions, params.seed);

  std::vector<double> values(coalitions.size());
  parallel_for(coalitions.size(), params.threads, [&](std::size_t c) {
    std::vector<double> local(d);
    values[c] = masked_value(f, x, background, coalitions[c], local);
  });

  // Eliminate phi_{D-1} through the efficiency constraint:
  //   v(z) - v(0) - z_last * delta = sum_{j < last} (z_j - z_last) phi_j.
  const std::size_t p = d - 1;
  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd row(static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < coalitions.size(); ++c) {
    const auto& z = coalitions[c];
    const std::size_t size = static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));
    const double w = a.exhaustive ? shapley_kernel_weight(d, size) : 1.0;
    const double last = z[p];
    for (std::size_t j = 0; j < p; ++j) row[static_cast<Eigen::Index>(j)] = z[j] - last;
    const double y = values[c] - a.base_value - last * delta;
    xtwx.noalias() += w * row * row.transpose();
    xtwy.noalias() += w * y * row;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtwx);
  if (qr.rank() < static_cast<Eigen::Index>(p)) {
    throw InsufficientCoalitions("coalition design is rank deficient (rank " +
                                 std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
  }
  const Eigen::VectorXd phi = qr.solve(xtwy);
  double rest = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    a.phis[j] = phi[static_cast<Eigen::Index>(j)];
    rest += a.phis[j];
  }
  a.phis[p] = delta - rest;
  return a;
}

Dataset shap_background(const Dataset& train, std::size_t n, std::uint64_t seed) {
  if (train.rows() <= n) return train;
  std::vector<bool> keep(train.rows(), false);
  const double frac = static_cast<double>(n) / static_cast<double>(train.rows());
  std::size_t taken = 0;
  for (Label c : {Label{1}, Label{0}}) {
    const auto rows = train.indices_of(c);
    if (rows.empty()) continue;
    std::size_t want = c == 0 ? n - taken
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(rows.size()))));
    want = std::min(want, rows.size());
    Rng rng(derive_seed(seed, std::uint64_t{c}));
    for (std::size_t p : sample_without_replacement(rng, rows.size(), want)) keep[rows[p]] = true;
    taken += want;
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    if (keep[i]) rows.push_back(i);
  }
  return train.subset(rows);
}

std::vector<FeatureImportance> global_importance(std::span<const Attribution> attributions,
                                                 const std::vector<std::string>& feature_names) {
  if (attributions.empty()) throw InvalidArgument("global_importance needs at least one attribution");
  const std::size_t d = feature_names.size();
  std::vector<double> mean(d, 0.0);
  for (const auto& a : attributions) {
    if (a.phis.size() != d) throw InvalidArgument("attribution dimension does not match feature names");
    for (std::size_t j = 0; j < d; ++j) mean[j] += std::abs(a.phis[j]);
  }
  std::vector<FeatureImportance> out;
  for (std::size_t j = 0; j < d; ++j) {
    out.push_back({feature_names[j], mean[j] / static_cast<double>(attributions.size())});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.value > b.value; });
  return out;
}

nlohmann::json force_record(const Attribution& a, const std::vector<std::string>& feature_names,
                            std::span<const double> feature_values) {
  const std::size_t d = a.phis.size();
  if (feature_names.size() != d || feature_values.size() != d) {
    throw InvalidArgument("force_record: inconsistent feature dimension");
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(a.phis[i]) > std::abs(a.phis[j]); });
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j : order) {
    features.push_back({{"name", feature_names[j]}, {"value", feature_values[j]}, {"phi", a.phis[j]}});
  }
  return {{"base_value", a.base_value}, {"fx", a.fx}, {"features", std::move(features)}};
}

}  // namespace txanomaly
