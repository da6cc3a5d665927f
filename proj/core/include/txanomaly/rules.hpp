#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/dataset.hpp"
#include "txanomaly/tree.hpp"

namespace txanomaly {

enum class PredicateOp { kLessEqual, kGreater };

struct Predicate {
  std::string feature;
  std::size_t feature_index = 0;
  PredicateOp op = PredicateOp::kLessEqual;
  double threshold = 0.0;

  bool holds(std::span<const double> x) const {
    const double v = x[feature_index];
    return op == PredicateOp::kLessEqual ? v <= threshold : v > threshold;
  }
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct AnomalyRule {
  std::vector<Predicate> predicates;
  Label predicted_class = 1;
  std::size_t support = 0;
  std::size_t correct = 0;
  double confidence = 0.0;
  std::size_t leaf = 0;  // node index in the source tree
};

struct RuleParams {
  Label target = 1;
  std::size_t min_support = 5;
  double min_confidence = 0.9;
};

struct LeafPath {
  std::size_t leaf;
  std::vector<Predicate> predicates;  // root to leaf, unsimplified
};

std::vector<LeafPath> leaf_paths(const TreeModel& tree);

// Per feature (in order of first appearance) the tightest '>' bound followed
// by the tightest '<=' bound.
std::vector<Predicate> simplify_predicates(std::span<const Predicate> path);

// One candidate per leaf predicting `target`; support and correct counts come
// from replaying the simplified rule over `reference`. Sorted by confidence,
// then support, both descending.
std::vector<AnomalyRule> extract_rules(const TreeModel& tree, const Dataset& reference,
                                       const RuleParams& params = {});

bool apply_rule(const AnomalyRule& rule, std::span<const double> x);
// Resolves predicates by name against `feature_names`; throws on a missing one.
bool apply_rule(const AnomalyRule& rule, std::span<const double> x,
                const std::vector<std::string>& feature_names);

struct Importance {
  std::string feature;
  double value;
};

// Normalized total Gini decrease per feature, sorted descending. Empty for a
// single-leaf tree.
std::vector<Importance> gini_importances(const TreeModel& tree);

std::string rule_text(const AnomalyRule& rule);
// Columns: rule, class, total, correct, confidence %.
std::string rules_table(std::span<const AnomalyRule> rules);
nlohmann::json rules_json(std::span<const AnomalyRule> rules);

}  // namespace txanomaly
