#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/adaboost.hpp"
#include "txanomaly/boosting.hpp"
#include "txanomaly/dataset.hpp"
#include "txanomaly/forest.hpp"
#include "txanomaly/logistic.hpp"
#include "txanomaly/tree.hpp"

namespace txanomaly {

inline constexpr int kModelFormatVersion = 1;

using LearnerParams =
    std::variant<TreeParams, ForestParams, GBoostParams, XgbParams, AdaBoostParams, LogisticParams>;
using LearnerModel = std::variant<TreeModel, ForestModel, BoostedModel, AdaBoostModel, LogisticModel>;

// Short kind names used in configs: dt, rf, gb, xgb, adaboost, lr.
std::string learner_kind(const LearnerParams& params);
LearnerParams default_learner_params(const std::string& kind);

// `seed` overrides any seed carried by the params.
LearnerModel fit_learner(const LearnerParams& params, const Dataset& train, std::uint64_t seed);

std::size_t n_features(const LearnerModel& m);
// Positive-class probability; throws on dimension mismatch.
double predict_proba(const LearnerModel& m, std::span<const double> x);
std::vector<double> predict_proba(const LearnerModel& m, const Dataset& d);

nlohmann::json tree_to_json(const TreeModel& m);
TreeModel tree_from_json(const nlohmann::json& j);
nlohmann::json learner_to_json(const LearnerModel& m);
LearnerModel learner_from_json(const nlohmann::json& j);

// Hyperparameter blocks. Unknown keys are rejected with ConfigError.
nlohmann::json params_to_json(const LearnerParams& params);
LearnerParams params_from_json(const std::string& kind, const nlohmann::json& j);

}  // namespace txanomaly
