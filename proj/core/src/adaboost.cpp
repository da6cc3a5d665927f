#include "txanomaly/adaboost.hpp"

#include <cmath>
#include <numeric>

#include "txanomaly/error.hpp"

namespace txanomaly {

double samme_alpha(double error) { return std::log((1.0 - error) / error); }

double AdaBoostModel::predict(std::span<const double> x) const {
  double vote = 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < stumps.size(); ++t) {
    total += alphas[t];
    if (hard_label(stumps[t].predict(x)) == 1) vote += alphas[t];
  }
  return total > 0.0 ? vote / total : 0.0;
}

AdaBoostModel fit_adaboost(MatrixView x, std::span<const Label> y, const AdaBoostParams& params,
                           std::vector<std::string> feature_names,
                           std::vector<AdaBoostRound>* rounds) {
  const std::size_t n = x.rows();
  if (y.size() != n) throw InvalidArgument("label count does not match rows");
  const std::size_t pos = std::accumulate(y.begin(), y.end(), std::size_t{0});
  if (pos == 0 || pos == n) throw InvalidArgument("AdaBoost needs both classes in y");

  TreeParams tp;
  tp.max_depth = params.stump_depth;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<std::uint8_t> miss(n);

  AdaBoostModel m;
  for (std::size_t t = 0; t < params.n_rounds; ++t) {
    TreeModel stump = fit_tree(x, y, tp, feature_names, w);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      miss[i] = hard_label(stump.predict(x.row(i))) != y[i];
      if (miss[i]) err += w[i];
    }
    err /= std::accumulate(w.begin(), w.end(), 0.0);

    if (err <= 0.0) {
      // A perfect learner decides alone.
      m.stumps.assign(1, std::move(stump));
      m.alphas.assign(1, 1.0);
      if (rounds) rounds->push_back({err, 1.0, 1.0});
      break;
    }
    if (err >= 0.5) {
      if (m.stumps.empty()) {
        m.stumps.push_back(std::move(stump));
        m.alphas.push_back(1.0);
        if (rounds) rounds->push_back({err, 1.0, 1.0});
      }
      break;
    }
    const double alpha = samme_alpha(err);
    const double boost = std::exp(alpha);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= boost;
      sum += w[i];
    }
    double check = 0.0;
    for (auto& wi : w) {
      wi /= sum;
      check += wi;
    }
    m.stumps.push_back(std::move(stump));
    m.alphas.push_back(alpha);
    if (rounds) rounds->push_back({err, alpha, check});
  }
  m.feature_names = m.stumps.front().feature_names;
  return m;
}

}  // namespace txanomaly
