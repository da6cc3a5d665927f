#include "txanomaly/rules.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "txanomaly/error.hpp"

namespace txanomaly {

std::vector<LeafPath> leaf_paths(const TreeModel& tree) {
  std::vector<LeafPath> out;
  if (tree.nodes.empty()) return out;
  struct Frame {
    std::size_t node;
    std::vector<Predicate> path;
  };
  std::vector<Frame> stack{{0, {}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const auto& n = tree.nodes[f.node];
    if (n.is_leaf()) {
      out.push_back({f.node, std::move(f.path)});
      continue;
    }
    const auto j = static_cast<std::size_t>(n.feature);
    const std::string name = j < tree.feature_names.size() ? tree.feature_names[j] : "x" + std::to_string(j);
    Frame right{static_cast<std::size_t>(n.right), f.path};
    right.path.push_back({name, j, PredicateOp::kGreater, n.threshold});
    f.path.push_back({name, j, PredicateOp::kLessEqual, n.threshold});
    stack.push_back(std::move(right));
    stack.push_back({static_cast<std::size_t>(n.left), std::move(f.path)});
  }
  return out;
}

std::vector<Predicate> simplify_predicates(std::span<const Predicate> path) {
  struct Bounds {
    std::size_t feature;
    std::string name;
    std::optional<double> lower;
    std::optional<double> upper;
  };
  std::vector<Bounds> bounds;
  for (const auto& p : path) {
    auto it = std::find_if(bounds.begin(), bounds.end(),
                           [&](const Bounds& b) { return b.feature == p.feature_index; });
    if (it == bounds.end()) {
      bounds.push_back({p.feature_index, p.feature, std::nullopt, std::nullopt});
      it = bounds.end() - 1;
    }
    if (p.op == PredicateOp::kGreater) {
      it->lower = it->lower ? std::max(*it->lower, p.threshold) : p.threshold;
    } else {
      it->upper = it->upper ? std::min(*it->upper, p.threshold) : p.threshold;
    }
  }
  std::vector<Predicate> out;
  for (const auto& b : bounds) {
    if (b.lower) out.push_back({b.name, b.feature, PredicateOp::kGreater, *b.lower});
    if (b.upper) out.push_back({b.name, b.feature, PredicateOp::kLessEqual, *b.upper});
  }
  return out;
}

bool apply_rule(const AnomalyRule& rule, std::span<const double> x) {
  return std::all_of(rule.predicates.begin(), rule.predicates.end(),
                     [&](const Predicate& p) { return p.holds(x); });
}

bool apply_rule(const AnomalyRule& rule, std::span<const double> x,
                const std::vector<std::string>& feature_names) {
  if (x.size() != feature_names.size()) throw InvalidArgument("apply_rule: dimension mismatch");
  for (const auto& p : rule.predicates) {
    const auto it = std::find(feature_names.begin(), feature_names.end(), p.feature);
    if (it == feature_names.end()) throw InvalidArgument("rule feature '" + p.feature + "' not present");
    const double v = x[static_cast<std::size_t>(it - feature_names.begin())];
    if (!(p.op == PredicateOp::kLessEqual ? v <= p.threshold : v > p.threshold)) return false;
  }
  return true;
}

std::vector<AnomalyRule> extract_rules(const TreeModel& tree, const Dataset& reference,
                                       const RuleParams& params) {
  if (tree.feature_names != reference.column_names()) {
    throw SchemaError("tree features do not match the reference dataset columns");
  }
  std::vector<AnomalyRule> out;
  for (auto& path : leaf_paths(tree)) {
    if (hard_label(tree.nodes[path.leaf].value) != params.target) continue;
    AnomalyRule r;
    r.predicates = simplify_predicates(path.predicates);
    r.predicted_class = params.target;
    r.leaf = path.leaf;
    for (std::size_t i = 0; i < reference.rows(); ++i) {
      if (!apply_rule(r, reference.row(i))) continue;
      ++r.support;
      r.correct += reference.label(i) == params.target;
    }
    if (r.support == 0) continue;
    r.confidence = static_cast<double>(r.correct) / static_cast<double>(r.support);
    if (r.support < params.min_support || r.confidence < params.min_confidence) continue;
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const AnomalyRule& a, const AnomalyRule& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.support > b.support;
  });
  return out;
}

std::vector<Importance> gini_importances(const TreeModel& tree) {
  std::vector<Importance> out;
  if (tree.nodes.empty() || tree.nodes[0].is_leaf()) return out;
  const double total = static_cast<double>(tree.nodes[0].n_samples);
  std::vector<double> acc(tree.n_features(), 0.0);
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) continue;
    const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
    const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
    const double dec = (static_cast<double>(n.n_samples) * n.impurity -
                        static_cast<double>(l.n_samples) * l.impurity -
                        static_cast<double>(r.n_samples) * r.impurity) /
                       total;
    acc[static_cast<std::size_t>(n.feature)] += std::max(dec, 0.0);
  }
  double sum = 0.0;
  for (double v : acc) sum += v;
  for (std::size_t j = 0; j < acc.size(); ++j) {
    out.push_back({tree.feature_names[j], sum > 0.0 ? acc[j] / sum : 0.0});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Importance& a, const Importance& b) { return a.value > b.value; });
  return out;
}

std::string rule_text(const AnomalyRule& rule) {
  if (rule.predicates.empty()) return "(always)";
  std::string s;
  for (std::size_t i = 0; i < rule.predicates.size(); ++i) {
    const auto& p = rule.predicates[i];
    if (i) s += " AND ";
    s += fmt::format("{} {} {:.3f}", p.feature, p.op == PredicateOp::kLessEqual ? "<=" : ">", p.threshold);
  }
  return s;
}

std::string rules_table(std::span<const AnomalyRule> rules) {
  if (rules.empty()) return "no qualifying rules\n";
  std::string out = "rule | class | total | correct | confidence\n";
  for (const auto& r : rules) {
    out += fmt::format("{} | {} | {} | {} | {:.0f}%\n", rule_text(r),
                       r.predicted_class == 1 ? "anomalous" : "normal", r.support, r.correct,
                       std::round(r.confidence * 100.0));
  }
  return out;
}

nlohmann::json rules_json(std::span<const AnomalyRule> rules) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rules) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& p : r.predicates) {
      preds.push_back({{"feature", p.feature},
                       {"op", p.op == PredicateOp::kLessEqual ? "<=" : ">"},
                       {"threshold", p.threshold}});
    }
    arr.push_back({{"predicates", std::move(preds)},
                   {"text", rule_text(r)},
                   {"class", r.predicted_class == 1 ? "anomalous" : "normal"},
                   {"support", r.support},
                   {"correct", r.correct},
                   {"confidence", r.confidence},
                   {"leaf", r.leaf}});
  }
  nlohmann::json j = {{"rules", std::move(arr)}};
  if (rules.empty()) j["note"] = "no qualifying rules";
  return j;
}

}  // namespace txanomaly
