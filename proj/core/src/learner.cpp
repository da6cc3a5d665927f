#include "txanomaly/learner.hpp"

#include <set>

#include "txanomaly/error.hpp"

namespace txanomaly {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string learner_kind(const LearnerParams& params) {
  return std::visit(overloaded{[](const TreeParams&) { return std::string("dt"); },
                               [](const ForestParams&) { return std::string("rf"); },
                               [](const GBoostParams&) { return std::string("gb"); },
                               [](const XgbParams&) { return std::string("xgb"); },
                               [](const AdaBoostParams&) { return std::string("adaboost"); },
                               [](const LogisticParams&) { return std::string("lr"); }},
                    params);
}

LearnerParams default_learner_params(const std::string& kind) {
  if (kind == "dt") return TreeParams{};
  if (kind == "rf") return ForestParams{};
  if (kind == "gb") return GBoostParams{};
  if (kind == "xgb") return XgbParams{};
  if (kind == "adaboost") return AdaBoostParams{};
  if (kind == "lr") return LogisticParams{};
  throw ConfigError("unknown learner kind '" + kind + "'");
}

LearnerModel fit_learner(const LearnerParams& params, const Dataset& train, std::uint64_t seed) {
  const auto x = train.features();
  const auto y = train.labels();
  const auto& names = train.column_names();
  return std::visit(
      overloaded{
          [&](const TreeParams& p) -> LearnerModel { return fit_tree(x, y, p, names); },
          [&](const ForestParams& p) -> LearnerModel {
            ForestParams q = p;
            q.seed = seed;
            return fit_forest(x, y, q, names);
          },
          [&](const GBoostParams& p) -> LearnerModel { return fit_gboost(x, y, p, names); },
          [&](const XgbParams& p) -> LearnerModel { return fit_xgb(x, y, p, names); },
          [&](const AdaBoostParams& p) -> LearnerModel { return fit_adaboost(x, y, p, names); },
          [&](const LogisticParams& p) -> LearnerModel { return fit_logistic(x, y, p); }},
      params);
}

std::size_t n_features(const LearnerModel& m) {
  return std::visit(overloaded{[](const LogisticModel& l) { return l.weights.size(); },
                               [](const TreeModel& t) { return t.n_features(); },
                               [](const auto& other) { return other.feature_names.size(); }},
                    m);
}

double predict_proba(const LearnerModel& m, std::span<const double> x) {
  if (x.size() != n_features(m)) {
    throw InvalidArgument("expected " + std::to_string(n_features(m)) + " features, got " +
                          std::to_string(x.size()));
  }
  return std::visit([&](const auto& model) { return model.predict(x); }, m);
}

std::vector<double> predict_proba(const LearnerModel& m, const Dataset& d) {
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = predict_proba(m, d.row(i));
  return out;
}

// ---------------------------------------------------------------- model JSON

json tree_to_json(const TreeModel& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    json jn = {{"n_samples", n.n_samples},
               {"class_counts", {n.class_counts[0], n.class_counts[1]}},
               {"impurity", n.impurity},
               {"value", n.value}};
    if (!n.is_leaf()) {
      jn["feature"] = n.feature;
      jn["threshold"] = n.threshold;
      jn["left"] = n.left;
      jn["right"] = n.right;
    }
    nodes.push_back(std::move(jn));
  }
  return {{"kind", m.kind == TreeKind::kClassifier ? "classifier" : "regressor"},
          {"max_depth", m.max_depth},
          {"feature_names", m.feature_names},
          {"nodes", std::move(nodes)}};
}

TreeModel tree_from_json(const json& j) {
  TreeModel m;
  m.kind = j.at("kind").get<std::string>() == "classifier" ? TreeKind::kClassifier
                                                           : TreeKind::kRegressor;
  m.max_depth = j.at("max_depth").get<std::size_t>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.n_samples = jn.at("n_samples").get<std::size_t>();
    n.class_counts = {jn.at("class_counts").at(0).get<std::size_t>(),
                      jn.at("class_counts").at(1).get<std::size_t>()};
    n.impurity = jn.at("impurity").get<double>();
    n.value = jn.at("value").get<double>();
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<std::int32_t>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<std::int32_t>();
      n.right = jn.at("right").get<std::int32_t>();
    }
    m.nodes.push_back(n);
  }
  const auto count = static_cast<std::int32_t>(m.nodes.size());
  for (std::int32_t i = 0; i < count; ++i) {
    const auto& n = m.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    if (n.left <= i || n.right <= i || n.left >= count || n.right >= count ||
        n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.feature_names.size()) {
      throw SchemaError("malformed tree node " + std::to_string(i));
    }
  }
  if (m.nodes.empty()) throw SchemaError("tree without nodes");
  return m;
}

namespace {

json trees_json(const std::vector<TreeModel>& trees) {
  json a = json::array();
  for (const auto& t : trees) a.push_back(tree_to_json(t));
  return a;
}

std::vector<TreeModel> trees_from(const json& a) {
  std::vector<TreeModel> out;
  for (const auto& t : a) out.push_back(tree_from_json(t));
  return out;
}

}  // namespace

json learner_to_json(const LearnerModel& model) {
  json j = std::visit(
      overloaded{
          [](const TreeModel& m) { return json{{"type", "tree"}, {"tree", tree_to_json(m)}}; },
          [](const ForestModel& m) {
            return json{{"type", "forest"},
                        {"feature_names", m.feature_names},
                        {"bootstrap_seeds", m.bootstrap_seeds},
                        {"trees", trees_json(m.trees)}};
          },
          [](const BoostedModel& m) {
            return json{{"type", "boosted"},
                        {"flavor", m.flavor == BoostFlavor::kGradient ? "gradient" : "second_order"},
                        {"learning_rate", m.learning_rate},
                        {"base_score", m.base_score},
                        {"feature_names", m.feature_names},
                        {"stages", trees_json(m.stages)}};
          },
          [](const AdaBoostModel& m) {
            return json{{"type", "adaboost"},
                        {"feature_names", m.feature_names},
                        {"alphas", m.alphas},
                        {"stumps", trees_json(m.stumps)}};
          },
          [](const LogisticModel& m) {
            return json{{"type", "logistic"},
                        {"weights", m.weights},
                        {"bias", m.bias},
                        {"converged", m.converged},
                        {"gradient_norm", m.gradient_norm},
                        {"iterations", m.iterations}};
          }},
      model);
  j["format_version"] = kModelFormatVersion;
  return j;
}

LearnerModel learner_from_json(const json& j) {
  if (j.value("format_version", 0) != kModelFormatVersion) {
    throw SchemaError("unsupported model format version");
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "tree") return tree_from_json(j.at("tree"));
  if (type == "forest") {
    ForestModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.bootstrap_seeds = j.at("bootstrap_seeds").get<std::vector<std::uint64_t>>();
    m.trees = trees_from(j.at("trees"));
    if (m.trees.empty()) throw SchemaError("forest without trees");
    return m;
  }
  if (type == "boosted") {
    BoostedModel m;
    m.flavor = j.at("flavor").get<std::string>() == "gradient" ? BoostFlavor::kGradient
                                                              : BoostFlavor::kSecondOrder;
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.stages = trees_from(j.at("stages"));
    return m;
  }
  if (type == "adaboost") {
    AdaBoostModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.alphas = j.at("alphas").get<std::vector<double>>();
    m.stumps = trees_from(j.at("stumps"));
    if (m.alphas.size() != m.stumps.size() || m.stumps.empty()) {
      throw SchemaError("adaboost stumps and alphas disagree");
    }
    return m;
  }
  if (type == "logistic") {
    LogisticModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.gradient_norm = j.at("gradient_norm").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    return m;
  }
  throw SchemaError("unknown learner type '" + type + "'");
}

// ---------------------------------------------------------------- params JSON

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " parameters must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + what + " parameters");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json params_to_json(const LearnerParams& params) {
  return std::visit(
      overloaded{
          [](const TreeParams& p) {
            return json{{"max_depth", p.max_depth},
                        {"min_samples_leaf", p.min_samples_leaf},
                        {"min_impurity_decrease", p.min_impurity_decrease}};
          },
          [](const ForestParams& p) {
            return json{{"n_trees", p.n_trees},
                        {"max_depth", p.max_depth},
                        {"min_samples_leaf", p.min_samples_leaf},
                        {"features_per_split", p.features_per_split},
                        {"bootstrap", p.bootstrap},
                        {"threads", p.threads}};
          },
          [](const GBoostParams& p) {
            return json{{"n_stages", p.n_stages},
                        {"learning_rate", p.learning_rate},
                        {"max_depth", p.max_depth},
                        {"min_samples_leaf", p.min_samples_leaf}};
          },
          [](const XgbParams& p) {
            return json{{"n_stages", p.n_stages},     {"learning_rate", p.learning_rate},
                        {"max_depth", p.max_depth},   {"lambda", p.lambda},
                        {"gamma", p.gamma},           {"min_child_weight", p.min_child_weight}};
          },
          [](const AdaBoostParams& p) {
            return json{{"n_rounds", p.n_rounds}, {"stump_depth", p.stump_depth}};
          },
          [](const LogisticParams& p) {
            return json{{"max_iters", p.max_iters}, {"tolerance", p.tolerance}, {"l2", p.l2}};
          }},
      params);
}

LearnerParams params_from_json(const std::string& kind, const json& j) {
  const json obj = j.is_null() ? json::object() : j;
  if (kind == "dt") {
    reject_unknown(obj, {"max_depth", "min_samples_leaf", "min_impurity_decrease"}, kind);
    TreeParams p;
    read(obj, "max_depth", p.max_depth);
    read(obj, "min_samples_leaf", p.min_samples_leaf);
    read(obj, "min_impurity_decrease", p.min_impurity_decrease);
    return p;
  }
  if (kind == "rf") {
    reject_unknown(obj, {"n_trees", "max_depth", "min_samples_leaf", "features_per_split",
                         "bootstrap", "threads"}, kind);
    ForestParams p;
    read(obj, "n_trees", p.n_trees);
    read(obj, "max_depth", p.max_depth);
    read(obj, "min_samples_leaf", p.min_samples_leaf);
    read(obj, "features_per_split", p.features_per_split);
    read(obj, "bootstrap", p.bootstrap);
    read(obj, "threads", p.threads);
    return p;
  }
  if (kind == "gb") {
    reject_unknown(obj, {"n_stages", "learning_rate", "max_depth", "min_samples_leaf"}, kind);
    GBoostParams p;
    read(obj, "n_stages", p.n_stages);
    read(obj, "learning_rate", p.learning_rate);
    read(obj, "max_depth", p.max_depth);
    read(obj, "min_samples_leaf", p.min_samples_leaf);
    return p;
  }
  if (kind == "xgb") {
    reject_unknown(obj, {"n_stages", "learning_rate", "max_depth", "lambda", "gamma",
                         "min_child_weight"}, kind);
    XgbParams p;
    read(obj, "n_stages", p.n_stages);
    read(obj, "learning_rate", p.learning_rate);
    read(obj, "max_depth", p.max_depth);
    read(obj, "lambda", p.lambda);
    read(obj, "gamma", p.gamma);
    read(obj, "min_child_weight", p.min_child_weight);
    return p;
  }
  if (kind == "adaboost") {
    reject_unknown(obj, {"n_rounds", "stump_depth"}, kind);
    AdaBoostParams p;
    read(obj, "n_rounds", p.n_rounds);
    read(obj, "stump_depth", p.stump_depth);
    return p;
  }
  if (kind == "lr") {
    reject_unknown(obj, {"max_iters", "tolerance", "l2"}, kind);
    LogisticParams p;
    read(obj, "max_iters", p.max_iters);
    read(obj, "tolerance", p.tolerance);
    read(obj, "l2", p.l2);
    return p;
  }
  throw ConfigError("unknown learner kind '" + kind + "'");
}

}  // namespace txanomaly
