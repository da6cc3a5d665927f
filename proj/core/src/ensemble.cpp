#include "txanomaly/ensemble.hpp"

#include <set>

#include "txanomaly/error.hpp"
#include "txanomaly/parallel.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

using nlohmann::json;

std::vector<double> StackedModel::base_outputs(std::span<const double> x) const {
  std::vector<double> out(bases.size());
  for (std::size_t j = 0; j < bases.size(); ++j) out[j] = predict_proba(bases[j], x);
  return out;
}

double StackedModel::predict(std::span<const double> x) const {
  const auto m = base_outputs(x);
  return meta.predict(m);
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold, std::size_t base, std::size_t n_bases) {
  return derive_seed(derive_seed(seed, "stacking.fold"), std::uint64_t{fold * n_bases + base});
}

}  // namespace

StackedModel fit_stacked(const Dataset& train, const StackedParams& params, std::uint64_t seed,
                         StackingAudit* audit) {
  const std::size_t b = params.bases.size();
  if (b == 0) throw InvalidArgument("stacking needs at least one base learner");
  const std::size_t n = train.rows();
  const std::size_t folds = params.folds;
  const auto fold_of = stratified_folds(train.labels(), folds, derive_seed(seed, "stacking.folds"));

  std::vector<std::vector<std::size_t>> fit_rows(folds);
  std::vector<std::vector<std::size_t>> score_rows(folds);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < folds; ++f) (fold_of[i] == f ? score_rows : fit_rows)[f].push_back(i);
  }

  std::vector<LearnerModel> fold_models(folds * b);
  std::vector<double> m(n * b, 0.0);
  parallel_for(folds * b, params.threads, [&](std::size_t task) {
    const std::size_t f = task / b;
    const std::size_t j = task % b;
    const Dataset part = train.subset(fit_rows[f]);
    fold_models[task] = fit_learner(params.bases[j], part, fold_seed(seed, f, j, b));
    for (std::size_t i : score_rows[f]) m[i * b + j] = predict_proba(fold_models[task], train.row(i));
  });

  StackedModel model;
  model.folds = folds;
  model.meta = fit_logistic(MatrixView(m, n, b), train.labels(), params.meta);
  model.bases.resize(b);
  parallel_for(b, params.threads, [&](std::size_t j) {
    const auto base_seed = derive_seed(derive_seed(seed, "stacking.base"), std::uint64_t{j});
    model.bases[j] = fit_learner(params.bases[j], train, base_seed);
  });

  if (audit) {
    audit->fold_of_row = fold_of;
    audit->fit_rows = fit_rows;
    audit->n_bases = b;
    audit->meta_features = m;
    audit->fold_models.assign(folds, {});
    for (std::size_t f = 0; f < folds; ++f) {
      for (std::size_t j = 0; j < b; ++j) audit->fold_models[f].push_back(fold_models[f * b + j]);
    }
  }
  return model;
}

std::vector<double> regenerate_meta_features(const Dataset& train, const StackingAudit& audit) {
  const std::size_t b = audit.n_bases;
  std::vector<double> m(train.rows() * b);
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const auto& models = audit.fold_models.at(audit.fold_of_row.at(i));
    for (std::size_t j = 0; j < b; ++j) m[i * b + j] = predict_proba(models[j], train.row(i));
  }
  return m;
}

VoteResult combine_votes(std::span<const double> probs, VoteMode mode) {
  if (probs.empty()) throw InvalidArgument("voting needs at least one member");
  double mean = 0.0;
  std::size_t votes = 0;
  for (double p : probs) {
    mean += p;
    votes += hard_label(p);
  }
  mean /= static_cast<double>(probs.size());
  if (mode == VoteMode::kSoft) return {hard_label(mean), mean};
  const std::size_t n = probs.size();
  Label label;
  if (2 * votes != n) {
    label = 2 * votes > n ? Label{1} : Label{0};
  } else {
    label = hard_label(mean);
  }
  return {label, static_cast<double>(votes) / static_cast<double>(n)};
}

VoteResult VotingModel::vote(std::span<const double> x) const {
  std::vector<double> probs(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) probs[j] = predict_proba(members[j], x);
  return combine_votes(probs, mode);
}

VotingModel fit_voting(const Dataset& train, const VotingParams& params, std::uint64_t seed) {
  if (params.members.size() < 2) throw InvalidArgument("voting needs at least two members");
  VotingModel v;
  v.mode = params.mode;
  for (std::size_t j = 0; j < params.members.size(); ++j) {
    const auto member_seed = derive_seed(derive_seed(seed, "voting.member"), std::uint64_t{j});
    v.members.push_back(fit_learner(params.members[j], train, member_seed));
  }
  return v;
}

// ---------------------------------------------------------------- Model

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dims(const Model& m, std::span<const double> x) {
  if (x.size() != m.feature_names.size()) {
    throw InvalidArgument("model expects " + std::to_string(m.feature_names.size()) +
                          " features, got " + std::to_string(x.size()));
  }
}

}  // namespace

double Model::predict_proba(std::span<const double> x) const {
  check_dims(*this, x);
  return std::visit(overloaded{[&](const LearnerModel& l) { return txanomaly::predict_proba(l, x); },
                               [&](const StackedModel& s) { return s.predict(x); },
                               [&](const VotingModel& v) { return v.vote(x).probability; }},
                    impl);
}

Label Model::predict_label(std::span<const double> x) const {
  if (const auto* v = std::get_if<VotingModel>(&impl)) {
    check_dims(*this, x);
    return v->vote(x).label;
  }
  return hard_label(predict_proba(x));
}

std::vector<double> Model::predict_proba(const Dataset& d) const {
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = predict_proba(d.row(i));
  return out;
}

std::vector<Label> Model::predict_labels(const Dataset& d) const {
  std::vector<Label> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = predict_label(d.row(i));
  return out;
}

Model fit_model(const ModelSpec& spec, const Dataset& train, std::uint64_t seed) {
  Model m;
  m.kind = spec.kind;
  m.feature_names = train.column_names();
  if (spec.kind == "stacked") {
    m.impl = fit_stacked(train, spec.stacked, seed);
  } else if (spec.kind == "voting") {
    m.impl = fit_voting(train, spec.voting, seed);
  } else {
    m.impl = fit_learner(spec.learner, train, seed);
  }
  return m;
}

json model_to_json(const Model& m) {
  json body = std::visit(
      overloaded{[](const LearnerModel& l) { return learner_to_json(l); },
                 [](const StackedModel& s) {
                   json bases = json::array();
                   for (const auto& b : s.bases) bases.push_back(learner_to_json(b));
                   return json{{"bases", std::move(bases)},
                               {"meta", learner_to_json(LearnerModel{s.meta})},
                               {"folds", s.folds}};
                 },
                 [](const VotingModel& v) {
                   json members = json::array();
                   for (const auto& b : v.members) members.push_back(learner_to_json(b));
                   return json{{"members", std::move(members)},
                               {"mode", v.mode == VoteMode::kHard ? "hard" : "soft"}};
                 }},
      m.impl);
  return {{"format_version", kModelFormatVersion},
          {"kind", m.kind},
          {"feature_names", m.feature_names},
          {"model", std::move(body)}};
}

Model model_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw SchemaError("unsupported model format version");
    }
    Model m;
    m.kind = j.at("kind").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& body = j.at("model");
    if (m.kind == "stacked") {
      StackedModel s;
      for (const auto& b : body.at("bases")) s.bases.push_back(learner_from_json(b));
      auto meta = learner_from_json(body.at("meta"));
      if (!std::holds_alternative<LogisticModel>(meta)) throw SchemaError("stacked meta must be logistic");
      s.meta = std::get<LogisticModel>(std::move(meta));
      s.folds = body.at("folds").get<std::size_t>();
      if (s.meta.weights.size() != s.bases.size()) {
        throw SchemaError("stacked meta dimension does not match base count");
      }
      m.impl = std::move(s);
    } else if (m.kind == "voting") {
      VotingModel v;
      for (const auto& b : body.at("members")) v.members.push_back(learner_from_json(b));
      v.mode = body.at("mode").get<std::string>() == "hard" ? VoteMode::kHard : VoteMode::kSoft;
      m.impl = std::move(v);
    } else {
      m.impl = learner_from_json(body);
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  }
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + what);
  }
}

std::vector<LearnerParams> learner_list(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array");
  std::vector<LearnerParams> out;
  for (const auto& item : j) {
    reject_unknown(item, {"kind", "params"}, what + " entry");
    if (!item.contains("kind")) throw ConfigError(what + " entry lacks 'kind'");
    const auto kind = item.at("kind").get<std::string>();
    out.push_back(params_from_json(kind, item.value("params", json::object())));
  }
  return out;
}

json learner_list_json(const std::vector<LearnerParams>& list) {
  json out = json::array();
  for (const auto& p : list) out.push_back({{"kind", learner_kind(p)}, {"params", params_to_json(p)}});
  return out;
}

}  // namespace

ModelSpec model_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("model entry needs a 'kind'");
  ModelSpec s;
  try {
    s.kind = j.at("kind").get<std::string>();
    s.name = j.value("name", s.kind);
    if (s.kind == "stacked") {
      reject_unknown(j, {"name", "kind", "bases", "folds", "meta", "threads"}, "stacked model");
      if (j.contains("bases")) s.stacked.bases = learner_list(j.at("bases"), "stacked bases");
      s.stacked.folds = j.value("folds", s.stacked.folds);
      s.stacked.threads = j.value("threads", s.stacked.threads);
      if (j.contains("meta")) s.stacked.meta = std::get<LogisticParams>(params_from_json("lr", j.at("meta")));
      if (s.stacked.folds < 2) throw ConfigError("stacked folds must be >= 2");
    } else if (s.kind == "voting") {
      reject_unknown(j, {"name", "kind", "members", "mode"}, "voting model");
      if (j.contains("members")) s.voting.members = learner_list(j.at("members"), "voting members");
      const auto mode = j.value("mode", std::string("soft"));
      if (mode != "hard" && mode != "soft") throw ConfigError("voting mode must be 'hard' or 'soft'");
      s.voting.mode = mode == "hard" ? VoteMode::kHard : VoteMode::kSoft;
      if (s.voting.members.size() < 2) throw ConfigError("voting needs at least two members");
    } else {
      reject_unknown(j, {"name", "kind", "params"}, "model '" + s.kind + "'");
      s.learner = params_from_json(s.kind, j.value("params", json::object()));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model entry: ") + e.what());
  }
  return s;
}

json model_spec_to_json(const ModelSpec& s) {
  json j = {{"name", s.name}, {"kind", s.kind}};
  if (s.kind == "stacked") {
    j["bases"] = learner_list_json(s.stacked.bases);
    j["folds"] = s.stacked.folds;
    j["meta"] = params_to_json(s.stacked.meta);
  } else if (s.kind == "voting") {
    j["members"] = learner_list_json(s.voting.members);
    j["mode"] = s.voting.mode == VoteMode::kHard ? "hard" : "soft";
  } else {
    j["params"] = params_to_json(s.learner);
  }
  return j;
}

}  // namespace txanomaly
