#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "txanomaly/ensemble.hpp"
#include "txanomaly/error.hpp"

using namespace txanomaly;

namespace {

StackedParams light_stack(std::size_t folds) {
  TreeParams dt;
  dt.max_depth = 4;
  ForestParams rf;
  rf.n_trees = 10;
  rf.max_depth = 5;
  GBoostParams gb;
  gb.n_stages = 15;
  AdaBoostParams ada;
  ada.n_rounds = 10;
  StackedParams p;
  p.bases = {rf, dt, gb, ada};
  p.folds = folds;
  return p;
}

const SplitPair& split() {
  static const SplitPair s = stratified_split(gen_synthetic(800, 80, 2.0, 5), 0.25, 3);
  return s;
}

}  // namespace

TEST(Stacking, MetaFeatureShapeAndRange) {
  Rng rng(1);
  const Dataset d = gen::blobs(rng, 70, 30, 3, 1.0);
  StackingAudit audit;
  fit_stacked(d, light_stack(5), 1, &audit);
  ASSERT_EQ(audit.meta_features.size(), 100u * 4u);
  for (double v : audit.meta_features) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Stacking, OutOfFoldAndRegeneration) {
  const Dataset& d = split().train;
  const auto params = light_stack(4);
  StackingAudit audit;
  fit_stacked(d, params, 7, &audit);
  ASSERT_EQ(audit.fit_rows.size(), 4u);
  for (std::size_t f = 0; f < 4; ++f) {
    std::set<std::size_t> fit(audit.fit_rows[f].begin(), audit.fit_rows[f].end());
    for (std::size_t i = 0; i < d.rows(); ++i) {
      // Row i is scored only by fold fold_of_row[i]; that fold never trained on it.
      EXPECT_EQ(fit.count(i) == 0, audit.fold_of_row[i] == f);
    }
  }
  // The recorded fold models are exactly what the recorded rows produce.
  for (std::size_t f = 0; f < 4; ++f) {
    const Dataset part = d.subset(audit.fit_rows[f]);
    for (std::size_t j = 0; j < params.bases.size(); ++j) {
      const auto seed = derive_seed(derive_seed(7, "stacking.fold"), std::uint64_t{f * 4 + j});
      EXPECT_EQ(learner_to_json(fit_learner(params.bases[j], part, seed)).dump(),
                learner_to_json(audit.fold_models[f][j]).dump());
    }
  }
  const auto regen = regenerate_meta_features(d, audit);
  ASSERT_EQ(regen.size(), audit.meta_features.size());
  for (std::size_t i = 0; i < regen.size(); ++i) EXPECT_EQ(regen[i], audit.meta_features[i]);
}

TEST(Stacking, PerfectBaseGetsLargestWeight) {
  Rng rng(2);
  std::vector<double> v;
  std::vector<Label> y;
  for (int i = 0; i < 120; ++i) {
    const Label c = i % 3 == 0;
    v.push_back(c);
    v.push_back(uniform_unit(rng));
    y.push_back(c);
  }
  const Dataset d(gen::names(2), v, y);
  TreeParams perfect;
  perfect.max_depth = 1;
  TreeParams constant;
  constant.max_depth = 0;
  StackedParams p;
  p.bases = {constant, perfect};
  p.folds = 2;
  const auto m = fit_stacked(d, p, 3);
  EXPECT_GT(m.meta.weights[1], 0.0);
  EXPECT_GT(m.meta.weights[1], std::abs(m.meta.weights[0]));
}

TEST(Stacking, NeutralMetaGivesHalf) {
  LogisticModel meta;
  meta.weights = {0, 0, 0, 0};
  const std::vector<double> halves{0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(meta.predict(halves), 0.5);
}

TEST(Stacking, DeterministicAndThreadInvariant) {
  const Dataset& d = split().train;
  auto p = light_stack(3);
  const auto a = fit_stacked(d, p, 9);
  p.threads = 3;
  const auto b = fit_stacked(d, p, 9);
  for (std::size_t i = 0; i < split().test.rows(); ++i) {
    EXPECT_EQ(a.predict(split().test.row(i)), b.predict(split().test.row(i)));
  }
}

TEST(Stacking, NoWorseThanWorstBase) {
  const auto& s = split();
  const auto m = fit_stacked(s.train, light_stack(5), 4);
  auto loss = [&](auto&& predict) {
    std::vector<double> p;
    for (std::size_t i = 0; i < s.test.rows(); ++i) p.push_back(predict(s.test.row(i)));
    return mean_log_loss(s.test.labels(), p);
  };
  const double stacked = loss([&](auto x) { return m.predict(x); });
  double worst = 0.0;
  for (const auto& b : m.bases) worst = std::max(worst, loss([&](auto x) { return predict_proba(b, x); }));
  EXPECT_LE(stacked, worst);
}

TEST(Voting, HandCases) {
  const std::vector<double> hard{0.9, 0.1, 0.8, 0.7, 0.2};
  EXPECT_EQ(combine_votes(hard, VoteMode::kHard).label, 1);
  EXPECT_EQ(combine_votes(hard, VoteMode::kHard).probability, 0.6);
  const std::vector<double> soft{0.6, 0.2, 0.4};
  const auto s = combine_votes(soft, VoteMode::kSoft);
  EXPECT_NEAR(s.probability, 0.4, 1e-15);
  EXPECT_EQ(s.label, 0);
  const std::vector<double> tie{0.9, 0.8, 0.3, 0.2};
  EXPECT_NEAR((0.9 + 0.8 + 0.3 + 0.2) / 4, 0.55, 1e-15);
  EXPECT_EQ(combine_votes(tie, VoteMode::kHard).label, 1);
  const std::vector<double> low_tie{0.6, 0.6, 0.1, 0.1};
  EXPECT_EQ(combine_votes(low_tie, VoteMode::kHard).label, 0);
}

TEST(Voting, SoftPermutationInvariantProperty) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(2 + uniform_index(rng, 6));
    for (auto& x : p) x = uniform_unit(rng);
    const auto a = combine_votes(p, VoteMode::kSoft);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle_indices(rng, perm);
    std::vector<double> q;
    for (auto i : perm) q.push_back(p[i]);
    const auto b = combine_votes(q, VoteMode::kSoft);
    EXPECT_NEAR(a.probability, b.probability, 1e-15);
    EXPECT_EQ(a.label, combine_votes(q, VoteMode::kSoft).label);
  }
}

TEST(Voting, IdenticalMembersAgreeWithSingle) {
  const auto& s = split();
  VotingParams vp;
  vp.members = {TreeParams{}, TreeParams{}, TreeParams{}};
  const auto single = fit_tree(s.train, {});
  for (VoteMode mode : {VoteMode::kHard, VoteMode::kSoft}) {
    vp.mode = mode;
    const auto v = fit_voting(s.train, vp, 5);
    for (std::size_t i = 0; i < s.test.rows(); ++i) {
      EXPECT_EQ(v.vote(s.test.row(i)).label, hard_label(predict_proba_tree(single, s.test.row(i))));
    }
  }
}

TEST(Voting, NeedsTwoMembers) {
  VotingParams vp;
  vp.members = {TreeParams{}};
  EXPECT_THROW(fit_voting(split().train, vp, 1), InvalidArgument);
}

TEST(Model, JsonRoundTripAllKinds) {
  const auto& s = split();
  const nlohmann::json specs = nlohmann::json::parse(R"([
    {"name": "DT", "kind": "dt", "params": {"max_depth": 5}},
    {"name": "LR", "kind": "lr"},
    {"name": "S", "kind": "stacked", "folds": 3,
     "bases": [{"kind": "dt", "params": {"max_depth": 3}}, {"kind": "xgb", "params": {"n_stages": 10}}]},
    {"name": "V", "kind": "voting", "mode": "hard",
     "members": [{"kind": "dt"}, {"kind": "adaboost", "params": {"n_rounds": 5}}, {"kind": "lr"}]}
  ])");
  for (const auto& js : specs) {
    const auto spec = model_spec_from_json(js);
    EXPECT_EQ(model_spec_to_json(model_spec_from_json(model_spec_to_json(spec))), model_spec_to_json(spec));
    const Model m = fit_model(spec, s.train, 2);
    const auto text = model_to_json(m).dump();
    const Model back = model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(model_to_json(back).dump(), text) << spec.kind;
    for (std::size_t i = 0; i < s.test.rows(); ++i) {
      EXPECT_EQ(m.predict_proba(s.test.row(i)), back.predict_proba(s.test.row(i)));
    }
    EXPECT_THROW(m.predict_proba(std::vector<double>{1.0}), InvalidArgument);
  }
}

TEST(Model, SpecStrictness) {
  EXPECT_THROW(model_spec_from_json({{"name", "x"}}), ConfigError);
  EXPECT_THROW(model_spec_from_json({{"name", "x"}, {"kind", "dt"}, {"bogus", 1}}), ConfigError);
  EXPECT_THROW(model_spec_from_json(nlohmann::json::parse(
                   R"({"name": "v", "kind": "voting", "members": [{"kind": "dt"}]})")),
               ConfigError);
  EXPECT_THROW(model_from_json({{"format_version", 99}}), SchemaError);
}
