#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/learner.hpp"
#include "txanomaly/logistic.hpp"

namespace txanomaly {

struct StackedParams {
  // Defaults to random forest, decision tree, gradient boosting, AdaBoost.
  std::vector<LearnerParams> bases{ForestParams{}, TreeParams{}, GBoostParams{}, AdaBoostParams{}};
  LogisticParams meta;
  std::size_t folds = 10;
  unsigned threads = 1;
};

struct StackedModel {
  std::vector<LearnerModel> bases;  // refit on the full training set
  LogisticModel meta;
  std::size_t folds = 0;

  std::vector<double> base_outputs(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
};

// What fit_stacked saw, enough to re-derive the meta-feature matrix.
struct StackingAudit {
  std::vector<std::size_t> fold_of_row;
  std::vector<std::vector<std::size_t>> fit_rows;      // [fold] training rows, ascending
  std::vector<std::vector<LearnerModel>> fold_models;  // [fold][base]
  std::size_t n_bases = 0;
  std::vector<double> meta_features;  // N x n_bases, row-major

  double meta(std::size_t row, std::size_t base) const {
    return meta_features[row * n_bases + base];
  }
};

// Out-of-fold stacking: M[i][j] comes from base j refit without row i's fold;
// the logistic meta-learner is fit on (M, y).
StackedModel fit_stacked(const Dataset& train, const StackedParams& params, std::uint64_t seed,
                         StackingAudit* audit = nullptr);

// Rebuilds M from the recorded fold models and assignments.
std::vector<double> regenerate_meta_features(const Dataset& train, const StackingAudit& audit);

enum class VoteMode { kHard, kSoft };

struct VoteResult {
  Label label = 0;
  // Soft: mean member probability. Hard: fraction of positive votes.
  double probability = 0.0;
};

// Hard ties fall to the mean probability (label 1 iff it exceeds 0.5).
VoteResult combine_votes(std::span<const double> member_probabilities, VoteMode mode);

struct VotingParams {
  // Defaults to decision tree, second-order booster, gradient boosting,
  // random forest, AdaBoost.
  std::vector<LearnerParams> members{TreeParams{}, XgbParams{}, GBoostParams{}, ForestParams{},
                                     AdaBoostParams{}};
  VoteMode mode = VoteMode::kSoft;
};

struct VotingModel {
  std::vector<LearnerModel> members;
  VoteMode mode = VoteMode::kSoft;

  VoteResult vote(std::span<const double> x) const;
};

VotingModel fit_voting(const Dataset& train, const VotingParams& params, std::uint64_t seed);

// Anything the toolkit can fit, with the feature names it was trained on.
struct Model {
  std::string kind;  // dt, rf, gb, xgb, adaboost, lr, stacked, voting
  std::vector<std::string> feature_names;
  std::variant<LearnerModel, StackedModel, VotingModel> impl;

  double predict_proba(std::span<const double> x) const;
  Label predict_label(std::span<const double> x) const;
  std::vector<double> predict_proba(const Dataset& d) const;
  std::vector<Label> predict_labels(const Dataset& d) const;
};

struct ModelSpec {
  std::string name;
  std::string kind;
  LearnerParams learner;  // single-learner kinds
  StackedParams stacked;
  VotingParams voting;
};

Model fit_model(const ModelSpec& spec, const Dataset& train, std::uint64_t seed);

nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

// {"name", "kind", "params" | "bases"/"folds"/"meta" | "members"/"mode"}.
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json model_spec_to_json(const ModelSpec& spec);

}  // namespace txanomaly
