#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "txanomaly/dataset.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

// Hard labels everywhere are 1[p > kDecisionThreshold].
inline constexpr double kDecisionThreshold = 0.5;

inline Label hard_label(double probability) {
  return probability > kDecisionThreshold ? Label{1} : Label{0};
}

// 1 - sum p_c^2 over the two classes. Throws InvalidArgument on (0, 0).
double gini(std::array<std::size_t, 2> class_counts);
double gini(double weight_negative, double weight_positive);

struct TreeNode {
  static constexpr std::int32_t kNone = -1;

  std::int32_t feature = kNone;  // kNone for leaves
  double threshold = 0.0;        // x[feature] <= threshold goes left
  std::int32_t left = kNone;
  std::int32_t right = kNone;
  std::size_t n_samples = 0;
  std::array<std::size_t, 2> class_counts{0, 0};
  double impurity = 0.0;  // gini(class_counts)
  // Classifier: positive-class probability of the node. Regressor: additive
  // stage output of the node.
  double value = 0.0;

  bool is_leaf() const { return feature == kNone; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

enum class TreeKind { kClassifier, kRegressor };

// Axis-aligned binary tree stored as a node array; nodes[0] is the root and
// children always follow their parent.
struct TreeModel {
  TreeKind kind = TreeKind::kClassifier;
  std::vector<TreeNode> nodes;
  std::size_t max_depth = 0;
  std::vector<std::string> feature_names;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t depth() const;
  std::size_t leaf_index(std::span<const double> x) const;
  // Leaf value without a dimension check; see predict_proba_tree.
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

  friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

struct TreeParams {
  std::size_t max_depth = 10;
  std::size_t min_samples_leaf = 1;
  double min_impurity_decrease = 0.0;
  // Features examined per split; 0 or >= D means all of them.
  std::size_t features_per_split = 0;
};

// CART classifier with exhaustive greedy Gini splits over midpoints of
// consecutive distinct values. Ties go to the lower feature index, then the
// lower threshold. Empty `weights` means unit weights.
TreeModel fit_tree(MatrixView x, std::span<const Label> y, const TreeParams& params,
                   std::vector<std::string> feature_names = {},
                   std::span<const double> weights = {});
TreeModel fit_tree(const Dataset& d, const TreeParams& params);

// Positive-class leaf fraction; throws on dimension mismatch.
double predict_proba_tree(const TreeModel& m, std::span<const double> x);

// Split threshold between consecutive distinct sorted values lo < hi. Always
// satisfies lo <= t < hi.
double midpoint(double lo, double hi);

// Second-order split gain: 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double xgb_split_gain(double g_left, double h_left, double g_right, double h_right, double lambda,
                      double gamma);

struct GradientTreeParams {
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 1;
  double lambda = 0.0;            // L2 term in the split gain
  double gamma = 0.0;             // complexity cost per split
  double min_child_weight = 0.0;  // minimum leaf hessian sum
  double leaf_lambda = 0.0;       // L2 term in the leaf weight -G/(H + leaf_lambda)
};

// Regression tree over per-row gradient statistics. The split gain uses
// `split_hess`; leaf weights use `leaf_hess`. Splits require gain > 0.
TreeModel fit_gradient_tree(MatrixView x, std::span<const Label> y, std::span<const double> grad,
                            std::span<const double> split_hess, std::span<const double> leaf_hess,
                            const GradientTreeParams& params,
                            std::vector<std::string> feature_names = {});

namespace detail {

// Fit on an explicit sample list (bootstrap rows may repeat). When `rng` is
// non-null and params.features_per_split < D, each node draws its candidate
// features from it.
TreeModel fit_tree_on_rows(MatrixView x, std::span<const Label> y, std::span<const double> weights,
                           std::span<const std::size_t> rows, const TreeParams& params,
                           std::vector<std::string> feature_names, Rng* rng);

}  // namespace detail

}  // namespace txanomaly
