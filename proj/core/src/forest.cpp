#include "txanomaly/forest.hpp"

#include <cmath>
#include <numeric>

#include "txanomaly/error.hpp"
#include "txanomaly/parallel.hpp"

namespace txanomaly {

double ForestModel::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

ForestModel fit_forest(MatrixView x, std::span<const Label> y, const ForestParams& params,
                       std::vector<std::string> feature_names) {
  if (params.n_trees < 1) throw InvalidArgument("forest needs at least one tree");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = params.min_samples_leaf;
  tp.features_per_split =
      params.features_per_split == 0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(double(d)))))
          : params.features_per_split;

  ForestModel m;
  m.trees.resize(params.n_trees);
  m.bootstrap_seeds.resize(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) m.bootstrap_seeds[t] = derive_seed(params.seed, t);

  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng(m.bootstrap_seeds[t]);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    m.trees[t] = detail::fit_tree_on_rows(x, y, {}, rows, tp, feature_names, &rng);
  });
  m.feature_names = m.trees.front().feature_names;
  return m;
}

}  // namespace txanomaly
