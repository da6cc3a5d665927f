#include "txanomaly/tree.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

#include "txanomaly/error.hpp"

namespace txanomaly {

__extension__ using U128 = unsigned __int128;

double gini(std::array<std::size_t, 2> class_counts) {
  const std::size_t n = class_counts[0] + class_counts[1];
  if (n == 0) throw InvalidArgument("gini of an empty node");
  const double p0 = static_cast<double>(class_counts[0]) / static_cast<double>(n);
  const double p1 = static_cast<double>(class_counts[1]) / static_cast<double>(n);
  return 1.0 - p0 * p0 - p1 * p1;
}

double gini(double weight_negative, double weight_positive) {
  const double w = weight_negative + weight_positive;
  if (!(w > 0.0)) throw InvalidArgument("gini of an empty node");
  const double p0 = weight_negative / w;
  const double p1 = weight_positive / w;
  return 1.0 - p0 * p0 - p1 * p1;
}

double midpoint(double lo, double hi) {
  const double t = lo / 2.0 + hi / 2.0;
  return (t >= hi || t < lo) ? lo : t;
}

double xgb_split_gain(double g_left, double h_left, double g_right, double h_right, double lambda,
                      double gamma) {
  const double g = g_left + g_right;
  const double h = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) -
                g * g / (h + lambda)) -
         gamma;
}

std::size_t TreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t TreeModel::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                       : n.right);
  }
  return i;
}

double predict_proba_tree(const TreeModel& m, std::span<const double> x) {
  if (x.size() != m.n_features()) {
    throw InvalidArgument("expected " + std::to_string(m.n_features()) + " features, got " +
                          std::to_string(x.size()));
  }
  return m.predict(x);
}

namespace {

// Per-feature sample orderings that are stably partitioned as the tree grows,
// so every node sees its samples sorted by each feature without re-sorting.
class SortedSamples {
 public:
  SortedSamples(MatrixView x, std::span<const std::size_t> rows) : x_(x), rows_(rows) {
    const std::size_t s = rows.size();
    order_.assign(x.cols(), std::vector<std::uint32_t>(s));
    for (std::size_t f = 0; f < x.cols(); ++f) {
      auto& ord = order_[f];
      std::iota(ord.begin(), ord.end(), 0u);
      std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double va = value(a, f);
        const double vb = value(b, f);
        return va < vb || (va == vb && a < b);
      });
    }
    goes_left_.resize(s);
    scratch_.resize(s);
  }

  double value(std::uint32_t sample, std::size_t f) const { return x_(rows_[sample], f); }
  std::size_t row(std::uint32_t sample) const { return rows_[sample]; }
  std::span<const std::uint32_t> segment(std::size_t f, std::size_t begin, std::size_t end) const {
    return std::span<const std::uint32_t>(order_[f]).subspan(begin, end - begin);
  }

  // Moves samples with x[f] <= threshold to the front of [begin, end) in every
  // ordering, preserving relative order. Returns the boundary.
  std::size_t partition(std::size_t begin, std::size_t end, std::size_t f, double threshold) {
    for (std::size_t p = begin; p < end; ++p) {
      const std::uint32_t s = order_[f][p];
      goes_left_[s] = value(s, f) <= threshold ? 1 : 0;
    }
    std::size_t mid = begin;
    for (auto& ord : order_) {
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t p = begin; p < end; ++p) {
        const std::uint32_t s = ord[p];
        if (goes_left_[s]) {
          ord[l++] = s;
        } else {
          scratch_[r++] = s;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                ord.begin() + static_cast<std::ptrdiff_t>(l));
      mid = l;
    }
    return mid;
  }

 private:
  MatrixView x_;
  std::span<const std::size_t> rows_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
};

std::vector<std::size_t> candidate_features(std::size_t d, std::size_t per_split, Rng* rng) {
  std::vector<std::size_t> feats;
  if (rng == nullptr || per_split == 0 || per_split >= d) {
    feats.resize(d);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    return feats;
  }
  feats = sample_without_replacement(*rng, d, per_split);
  std::sort(feats.begin(), feats.end());
  return feats;
}

// Unweighted Gini split quality as an exact rational: maximizing
// (a^2+b^2)/nL + (c^2+d^2)/nR is equivalent to minimizing the weighted child
// impurity. Compared by cross-multiplication so exact ties stay ties.
struct ExactScore {
  U128 num = 0;
  U128 den = 1;
  bool valid = false;
};

bool exact_better(const ExactScore& a, const ExactScore& b) {
  if (!b.valid) return a.valid;
  return a.num * b.den > b.num * a.den;
}

constexpr std::size_t kExactLimit = std::size_t{1} << 25;

class ClassificationBuilder {
 public:
  ClassificationBuilder(MatrixView x, std::span<const Label> y, std::span<const double> w,
                        std::span<const std::size_t> rows, const TreeParams& params, Rng* rng,
                        TreeModel& out)
      : x_(x), y_(y), w_(w), samples_(x, rows), params_(params), rng_(rng), out_(out),
        root_n_(rows.size()) {}

  void run() { build(0, root_n_, 0); }

 private:
  double weight(std::uint32_t s) const { return w_.empty() ? 1.0 : w_[samples_.row(s)]; }
  Label label(std::uint32_t s) const { return y_[samples_.row(s)]; }

  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    std::array<std::size_t, 2> counts{0, 0};
    double w0 = 0.0;
    double w1 = 0.0;
    for (std::uint32_t s : samples_.segment(0, begin, end)) {
      const Label c = label(s);
      ++counts[c];
      (c ? w1 : w0) += weight(s);
    }
    const auto id = static_cast<std::int32_t>(out_.nodes.size());
    TreeNode node;
    node.n_samples = n;
    node.class_counts = counts;
    node.impurity = gini(counts);
    node.value = w1 / (w0 + w1);
    out_.nodes.push_back(node);

    if (depth >= params_.max_depth || counts[0] == 0 || counts[1] == 0 ||
        n < 2 * std::max<std::size_t>(params_.min_samples_leaf, 1)) {
      return id;
    }

    const auto feats = candidate_features(x_.cols(), params_.features_per_split, rng_);
    const bool exact = w_.empty() && n <= kExactLimit;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);

    bool found = false;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    ExactScore best_exact;
    double best_weighted = -1.0;
    std::size_t best_left_n = 0;
    std::array<double, 4> best_w{};  // wl0, wl1, wr0, wr1

    for (std::size_t f : feats) {
      const auto seg = samples_.segment(f, begin, end);
      std::array<std::uint64_t, 2> left{0, 0};
      double lw0 = 0.0;
      double lw1 = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::uint32_t s = seg[k];
        const Label c = label(s);
        ++left[c];
        (c ? lw1 : lw0) += weight(s);
        const double v = samples_.value(s, f);
        const double v_next = samples_.value(seg[k + 1], f);
        if (v == v_next) continue;
        const std::size_t nl = k + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;

        bool better = false;
        if (exact) {
          const std::uint64_t a = left[0];
          const std::uint64_t b = left[1];
          const std::uint64_t cc = counts[0] - a;
          const std::uint64_t d = counts[1] - b;
          ExactScore sc;
          sc.num = static_cast<U128>(a * a + b * b) * nr +
                   static_cast<U128>(cc * cc + d * d) * nl;
          sc.den = static_cast<U128>(nl) * nr;
          sc.valid = true;
          if (exact_better(sc, best_exact)) {
            best_exact = sc;
            better = true;
          }
        } else {
          const double rw0 = w0 - lw0;
          const double rw1 = w1 - lw1;
          const double score = (lw0 * lw0 + lw1 * lw1) / (lw0 + lw1) +
                               (rw0 * rw0 + rw1 * rw1) / (rw0 + rw1);
          if (score > best_weighted) {
            best_weighted = score;
            better = true;
          }
        }
        if (better) {
          found = true;
          best_feature = f;
          best_threshold = midpoint(v, v_next);
          best_left_n = nl;
          best_w = {lw0, lw1, w0 - lw0, w1 - lw1};
        }
      }
    }
    if (!found) return id;

    const double wl = best_w[0] + best_w[1];
    const double wr = best_w[2] + best_w[3];
    const double decrease = gini(w0, w1) - wl / (wl + wr) * gini(best_w[0], best_w[1]) -
                            wr / (wl + wr) * gini(best_w[2], best_w[3]);
    const double weighted_decrease =
        static_cast<double>(n) / static_cast<double>(root_n_) * decrease;
    if (params_.min_impurity_decrease > 0.0 && weighted_decrease < params_.min_impurity_decrease) {
      return id;
    }

    const std::size_t mid = samples_.partition(begin, end, best_feature, best_threshold);
    if (mid - begin != best_left_n) throw Error("internal: split partition size mismatch");
    const auto l = build(begin, mid, depth + 1);
    const auto r = build(mid, end, depth + 1);
    auto& self = out_.nodes[static_cast<std::size_t>(id)];
    self.feature = static_cast<std::int32_t>(best_feature);
    self.threshold = best_threshold;
    self.left = l;
    self.right = r;
    return id;
  }

  MatrixView x_;
  std::span<const Label> y_;
  std::span<const double> w_;
  SortedSamples samples_;
  const TreeParams& params_;
  Rng* rng_;
  TreeModel& out_;
  std::size_t root_n_;
};

class GradientBuilder {
 public:
  GradientBuilder(MatrixView x, std::span<const Label> y, std::span<const double> g,
                  std::span<const double> hs, std::span<const double> hl,
                  std::span<const std::size_t> rows, const GradientTreeParams& params,
                  TreeModel& out)
      : x_(x), y_(y), g_(g), hs_(hs), hl_(hl), samples_(x, rows), params_(params), out_(out),
        n_(rows.size()) {}

  void run() { build(0, n_, 0); }

 private:
  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    std::array<std::size_t, 2> counts{0, 0};
    double g = 0.0;
    double hs = 0.0;
    double hl = 0.0;
    for (std::uint32_t s : samples_.segment(0, begin, end)) {
      const std::size_t r = samples_.row(s);
      ++counts[y_[r]];
      g += g_[r];
      hs += hs_[r];
      hl += hl_[r];
    }
    const auto id = static_cast<std::int32_t>(out_.nodes.size());
    TreeNode node;
    node.n_samples = n;
    node.class_counts = counts;
    node.impurity = gini(counts);
    const double denom = hl + params_.leaf_lambda;
    node.value = denom > 0.0 ? -g / denom : 0.0;
    out_.nodes.push_back(node);

    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    if (depth >= params_.max_depth || n < 2 * min_leaf) return id;

    double best_gain = 0.0;
    bool found = false;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      const auto seg = samples_.segment(f, begin, end);
      double gl = 0.0;
      double hsl = 0.0;
      double hll = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t r = samples_.row(seg[k]);
        gl += g_[r];
        hsl += hs_[r];
        hll += hl_[r];
        const double v = samples_.value(seg[k], f);
        const double v_next = samples_.value(seg[k + 1], f);
        if (v == v_next) continue;
        const std::size_t nl = k + 1;
        if (nl < min_leaf || n - nl < min_leaf) continue;
        if (hll < params_.min_child_weight || hl - hll < params_.min_child_weight) continue;
        const double gain = xgb_split_gain(gl, hsl, g - gl, hs - hsl, params_.lambda, params_.gamma);
        if (gain > best_gain) {
          best_gain = gain;
          found = true;
          best_feature = f;
          best_threshold = midpoint(v, v_next);
        }
      }
    }
    if (!found) return id;

    const std::size_t mid = samples_.partition(begin, end, best_feature, best_threshold);
    const auto l = build(begin, mid, depth + 1);
    const auto r = build(mid, end, depth + 1);
    auto& self = out_.nodes[static_cast<std::size_t>(id)];
    self.feature = static_cast<std::int32_t>(best_feature);
    self.threshold = best_threshold;
    self.left = l;
    self.right = r;
    return id;
  }

  MatrixView x_;
  std::span<const Label> y_;
  std::span<const double> g_;
  std::span<const double> hs_;
  std::span<const double> hl_;
  SortedSamples samples_;
  const GradientTreeParams& params_;
  TreeModel& out_;
  std::size_t n_;
};

std::vector<std::string> default_names(std::vector<std::string> names, std::size_t d) {
  if (names.empty()) {
    names.reserve(d);
    for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  }
  if (names.size() != d) throw InvalidArgument("feature name count does not match columns");
  return names;
}

void check_xy(MatrixView x, std::span<const Label> y) {
  if (x.rows() == 0) throw InvalidArgument("cannot fit a tree on empty input");
  if (y.size() != x.rows()) throw InvalidArgument("label count does not match rows");
  if (x.rows() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("too many rows for the tree learner");
  }
}

}  // namespace

namespace detail {

TreeModel fit_tree_on_rows(MatrixView x, std::span<const Label> y, std::span<const double> weights,
                           std::span<const std::size_t> rows, const TreeParams& params,
                           std::vector<std::string> feature_names, Rng* rng) {
  check_xy(x, y);
  if (rows.empty()) throw InvalidArgument("cannot fit a tree on an empty sample");
  if (!weights.empty() && weights.size() != x.rows()) {
    throw InvalidArgument("weight count does not match rows");
  }
  TreeModel m;
  m.kind = TreeKind::kClassifier;
  m.max_depth = params.max_depth;
  m.feature_names = default_names(std::move(feature_names), x.cols());
  ClassificationBuilder(x, y, weights, rows, params, rng, m).run();
  return m;
}

}  // namespace detail

TreeModel fit_tree(MatrixView x, std::span<const Label> y, const TreeParams& params,
                   std::vector<std::string> feature_names, std::span<const double> weights) {
  check_xy(x, y);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return detail::fit_tree_on_rows(x, y, weights, rows, params, std::move(feature_names), nullptr);
}

TreeModel fit_tree(const Dataset& d, const TreeParams& params) {
  return fit_tree(d.features(), d.labels(), params, d.column_names());
}

TreeModel fit_gradient_tree(MatrixView x, std::span<const Label> y, std::span<const double> grad,
                            std::span<const double> split_hess, std::span<const double> leaf_hess,
                            const GradientTreeParams& params,
                            std::vector<std::string> feature_names) {
  check_xy(x, y);
  if (grad.size() != x.rows() || split_hess.size() != x.rows() || leaf_hess.size() != x.rows()) {
    throw InvalidArgument("gradient statistics do not match rows");
  }
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeModel m;
  m.kind = TreeKind::kRegressor;
  m.max_depth = params.max_depth;
  m.feature_names = default_names(std::move(feature_names), x.cols());
  GradientBuilder(x, y, grad, split_hess, leaf_hess, rows, params, m).run();
  return m;
}

}  // namespace txanomaly
