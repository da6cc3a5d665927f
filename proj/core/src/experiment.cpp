#include "txanomaly/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "txanomaly/digest.hpp"
#include "txanomaly/explain.hpp"
#include "txanomaly/parallel.hpp"
#include "txanomaly/random.hpp"

#ifndef TXANOMALY_VERSION
#define TXANOMALY_VERSION "0.0.0"
#endif

namespace txanomaly {

namespace fs = std::filesystem;
using nlohmann::json;

std::string toolkit_version() { return TXANOMALY_VERSION; }

const std::vector<std::string>& sampler_names() {
  static const std::vector<std::string> names = {"none",  "rus",    "nearmiss1", "xgbclus",
                                                 "smote", "adasyn", "smoteenn",  "smotetomek"};
  return names;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"accuracy", "tpr", "fpr", "tnr", "auc"};
  return names;
}

std::uint64_t stage_seed(std::uint64_t root, const std::string& name) { return derive_seed(root, name); }

// ---------------------------------------------------------------- config

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError("'" + what + "' must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in '" + what + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SyntheticSchema parse_schema(const std::string& s) {
  if (s == "reduced") return SyntheticSchema::kReduced;
  if (s == "paper") return SyntheticSchema::kPaper;
  throw ConfigError("synthetic schema must be 'reduced' or 'paper'");
}

Metric parse_metric(const std::string& s) {
  if (s == "euclidean") return Metric::kEuclidean;
  if (s == "manhattan") return Metric::kManhattan;
  throw ConfigError("distance metric must be 'euclidean' or 'manhattan'");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j, {"seed", "data", "preprocess", "samplers", "sampling", "models", "metrics",
                       "shap", "rules", "threads", "output_dir"},
                   "config");
    if (!j.contains("seed")) throw ConfigError("config needs a 'seed'");
    c.seed = j.at("seed").get<std::uint64_t>();
    read(j, "threads", c.threads);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();

    if (!j.contains("data")) throw ConfigError("config needs a 'data' section");
    const auto& d = j.at("data");
    reject_unknown(d, {"input", "synthetic"}, "data");
    if (d.contains("input") == d.contains("synthetic")) {
      throw ConfigError("'data' needs exactly one of 'input' or 'synthetic'");
    }
    if (d.contains("input")) c.data.input = d.at("input").get<std::string>();
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      reject_unknown(s, {"n_major", "n_minor", "separation", "schema"}, "synthetic");
      SyntheticSpec spec;
      read(s, "n_major", spec.n_major);
      read(s, "n_minor", spec.n_minor);
      read(s, "separation", spec.separation);
      if (s.contains("schema")) spec.schema = parse_schema(s.at("schema").get<std::string>());
      c.data.synthetic = spec;
    }

    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      reject_unknown(p, {"drop", "dedup", "keep_negatives", "test_fraction", "p_threshold",
                         "drop_insignificant"},
                     "preprocess");
      if (p.contains("drop") && !(p.at("drop").is_string() && p.at("drop") == "default")) {
        c.preprocess.drop = p.at("drop").get<std::vector<std::string>>();
      }
      read(p, "dedup", c.preprocess.dedup);
      if (p.contains("keep_negatives") && !p.at("keep_negatives").is_null()) {
        c.preprocess.keep_negatives = p.at("keep_negatives").get<std::size_t>();
      }
      read(p, "test_fraction", c.preprocess.test_fraction);
      read(p, "p_threshold", c.preprocess.p_threshold);
      read(p, "drop_insignificant", c.preprocess.drop_insignificant);
    }

    if (j.contains("samplers")) c.samplers = j.at("samplers").get<std::vector<std::string>>();
    if (c.samplers.empty()) throw ConfigError("'samplers' must not be empty");
    std::set<std::string> seen;
    for (const auto& s : c.samplers) {
      if (std::find(sampler_names().begin(), sampler_names().end(), s) == sampler_names().end()) {
        throw ConfigError("unknown sampler '" + s + "'");
      }
      if (!seen.insert(s).second) throw ConfigError("sampler '" + s + "' listed twice");
    }

    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      reject_unknown(s, {"smote_k", "adasyn_k", "enn_k", "metric", "xgbclus"}, "sampling");
      read(s, "smote_k", c.sampling.smote_k);
      read(s, "adasyn_k", c.sampling.adasyn_k);
      read(s, "enn_k", c.sampling.enn_k);
      if (s.contains("metric")) c.sampling.metric = parse_metric(s.at("metric").get<std::string>());
      if (s.contains("xgbclus")) {
        const auto& x = s.at("xgbclus");
        reject_unknown(x, {"paper_faithful", "selector_fraction", "tmax0", "fmin0", "learner", "threads"},
                       "xgbclus");
        read(x, "paper_faithful", c.sampling.paper_faithful);
        read(x, "selector_fraction", c.sampling.selector_fraction);
        read(x, "tmax0", c.sampling.xgbclus.tmax0);
        if (x.contains("fmin0") && !x.at("fmin0").is_null()) {
          c.sampling.xgbclus.fmin0 = x.at("fmin0").get<std::int64_t>();
        }
        read(x, "threads", c.sampling.xgbclus.threads);
        if (x.contains("learner")) {
          c.sampling.xgbclus.learner = std::get<XgbParams>(params_from_json("xgb", x.at("learner")));
        }
      }
    }

    if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty()) {
      throw ConfigError("config needs a non-empty 'models' array");
    }
    std::set<std::string> names;
    for (const auto& m : j.at("models")) {
      c.models.push_back(model_spec_from_json(m));
      if (!names.insert(c.models.back().name).second) {
        throw ConfigError("model name '" + c.models.back().name + "' used twice");
      }
    }

    if (j.contains("metrics")) {
      c.metrics = j.at("metrics").get<std::vector<std::string>>();
      for (const auto& m : c.metrics) {
        if (std::find(metric_names().begin(), metric_names().end(), m) == metric_names().end()) {
          throw ConfigError("unknown metric '" + m + "'");
        }
      }
    }

    if (j.contains("shap")) {
      const auto& s = j.at("shap");
      reject_unknown(s, {"enabled", "model", "sampler", "background", "instances", "n_instances",
                         "n_coalitions"},
                     "shap");
      c.shap.enabled = s.value("enabled", true);
      read(s, "model", c.shap.model);
      read(s, "sampler", c.shap.sampler);
      read(s, "background", c.shap.background);
      read(s, "instances", c.shap.instances);
      read(s, "n_instances", c.shap.n_instances);
      read(s, "n_coalitions", c.shap.n_coalitions);
      if (c.shap.enabled) {
        if (c.shap.model.empty()) c.shap.model = c.models.front().name;
        if (!names.count(c.shap.model)) throw ConfigError("shap model '" + c.shap.model + "' is not configured");
        if (!seen.count(c.shap.sampler)) throw ConfigError("shap sampler '" + c.shap.sampler + "' is not configured");
      }
    }

    if (j.contains("rules")) {
      const auto& r = j.at("rules");
      reject_unknown(r, {"enabled", "sampler", "max_depth", "min_samples_leaf", "min_support",
                         "min_confidence", "reference"},
                     "rules");
      c.rules.enabled = r.value("enabled", true);
      read(r, "sampler", c.rules.sampler);
      read(r, "max_depth", c.rules.tree.max_depth);
      read(r, "min_samples_leaf", c.rules.tree.min_samples_leaf);
      read(r, "min_support", c.rules.params.min_support);
      read(r, "min_confidence", c.rules.params.min_confidence);
      const auto ref = r.value("reference", std::string("train"));
      if (ref != "train" && ref != "test") throw ConfigError("rules reference must be 'train' or 'test'");
      c.rules.reference_test = ref == "test";
      if (c.rules.enabled && !seen.count(c.rules.sampler)) {
        throw ConfigError("rules sampler '" + c.rules.sampler + "' is not configured");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------- prepare

Dataset load_input(const DataConfig& data, std::uint64_t seed) {
  if (data.input) return load_csv(*data.input);
  if (data.synthetic) {
    const auto& s = *data.synthetic;
    return gen_synthetic(s.n_major, s.n_minor, s.separation, stage_seed(seed, "synthetic"), s.schema);
  }
  throw ConfigError("no input data configured");
}

PreparedData prepare(const Dataset& raw, const PreprocessConfig& cfg, std::uint64_t seed) {
  PreparedData out;
  for (std::size_t j = 0; j < raw.cols(); ++j) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < raw.rows(); ++i) (raw.label(i) ? a : b).push_back(raw.at(i, j));
    TTestRow row;
    row.result.feature = raw.column_names()[j];
    try {
      row.result = welch_t_test(a, b, raw.column_names()[j]);
    } catch (const DegenerateInput&) {
      row.defined = false;
    } catch (const InvalidArgument&) {
      row.defined = false;
    }
    out.ttests.push_back(row);
  }

  std::vector<std::string> drop;
  if (cfg.drop) {
    drop = *cfg.drop;
  } else {
    for (const auto& name : default_drop_policy()) {
      if (raw.column_index(name)) drop.push_back(name);
    }
  }
  if (cfg.drop_insignificant) {
    for (const auto& t : out.ttests) {
      const bool insignificant = !t.defined || !(t.result.p_value < cfg.p_threshold);
      if (insignificant && std::find(drop.begin(), drop.end(), t.result.feature) == drop.end()) {
        drop.push_back(t.result.feature);
      }
    }
  }
  if (drop.size() >= raw.cols()) throw InvalidArgument("feature selection would drop every feature");
  out.dropped = drop;
  Dataset d = select_features(raw, drop);
  if (cfg.dedup) d = dedup_majority(d);
  if (cfg.keep_negatives) d = cap_negatives(d, *cfg.keep_negatives, stage_seed(seed, "prepare.cap"));
  out.split = stratified_split(d, cfg.test_fraction, stage_seed(seed, "prepare.split"));
  out.data = std::move(d);
  return out;
}

void write_ttest_csv(const std::vector<TTestRow>& rows, std::ostream& out) {
  out << "feature,t_value,p_value,df\n";
  for (const auto& r : rows) {
    if (r.defined) {
      out << fmt::format("{},{},{},{}\n", r.result.feature, r.result.t_value, r.result.p_value,
                         r.result.degrees_of_freedom);
    } else {
      out << r.result.feature << ",undefined,undefined,undefined\n";
    }
  }
}

// ---------------------------------------------------------------- sampling

SampleOutcome run_sampler(const std::string& name, const Dataset& train, const Dataset& test,
                          const SamplingConfig& cfg, std::uint64_t seed) {
  SampleOutcome out;
  BalanceMode mode = BalanceMode::kUnder;
  std::size_t synthetic = 0;
  const auto metric = cfg.metric;
  if (name == "none") {
    out.data = train;
  } else if (name == "rus") {
    out.data = random_undersample(train, seed);
  } else if (name == "nearmiss1") {
    out.data = near_miss_1(train, metric);
  } else if (name == "xgbclus") {
    XgbclusParams p = cfg.xgbclus;
    p.seed = derive_seed(seed, "draws");
    XgbclusResult r;
    if (cfg.paper_faithful) {
      r = xgbclus(train, test, p);
    } else {
      const auto sel = stratified_split(train, cfg.selector_fraction, derive_seed(seed, "selector"));
      r = xgbclus(sel.train, sel.test, p);
    }
    out.data = std::move(r.data);
    out.trace = std::move(r.trace);
  } else if (name == "smote") {
    mode = BalanceMode::kOver;
    out.data = smote(train, cfg.smote_k, seed, metric);
  } else if (name == "adasyn") {
    mode = BalanceMode::kOver;
    auto r = adasyn_detailed(train, cfg.adasyn_k, seed, metric);
    out.data = std::move(r.data);
    out.report.uniform_fallback = r.uniform_fallback;
  } else if (name == "smoteenn" || name == "smotetomek") {
    mode = BalanceMode::kOver;
    auto r = smote_detailed(train, cfg.smote_k, seed, metric);
    synthetic = r.origins.size();
    out.data = name == "smoteenn" ? enn_clean(r.data, cfg.enn_k, metric) : tomek_remove(r.data, metric);
  } else {
    throw ConfigError("unknown sampler '" + name + "'");
  }
  const bool fallback = out.report.uniform_fallback;
  out.report = balance_report(name, mode, out.data);
  out.report.uniform_fallback = fallback;
  if (mode == BalanceMode::kOver && synthetic == 0) synthetic = out.data.rows() - train.rows();
  out.report.n_synthetic = synthetic;
  out.report.n_removed = train.rows() + synthetic - out.data.rows();
  return out;
}

// ---------------------------------------------------------------- outputs

void write_text(const fs::path& out_dir, const std::string& rel, const std::string& text) {
  const fs::path path = out_dir / rel;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

json artifact_list(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  json out = json::array();
  for (const auto& f : files) {
    out.push_back({{"path", fs::relative(f, dir).generic_string()},
                   {"sha256", sha256_file(f)},
                   {"bytes", fs::file_size(f)}});
  }
  return out;
}

namespace {

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

std::optional<double> metric_value(const CellResult& c, const std::string& m) {
  if (m == "accuracy") return c.rates.accuracy;
  if (m == "tpr") return c.rates.tpr;
  if (m == "fpr") return c.rates.fpr;
  if (m == "tnr") return c.rates.tnr;
  return c.auc;
}

json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return "undefined";
}

struct StageLog {
  std::string name;
  std::string status;
  double seconds;
};

class Manifest {
 public:
  Manifest(const ExperimentConfig& cfg, json config_json)
      : config_(std::move(config_json)), seed_(cfg.seed), started_(now_iso()) {}

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        stages_.push_back({name, "complete", elapsed()});
      } else {
        auto r = fn();
        stages_.push_back({name, "complete", elapsed()});
        return r;
      }
    } catch (const ConfigError&) {
      stages_.push_back({name, "failed", elapsed()});
      throw;
    } catch (const SchemaError&) {
      stages_.push_back({name, "failed", elapsed()});
      throw;
    } catch (const StageError&) {
      stages_.push_back({name, "failed", elapsed()});
      throw;
    } catch (const std::exception& e) {
      stages_.push_back({name, "failed", elapsed()});
      throw StageError(name, e.what());
    }
  }

  void skip(const std::string& name) { stages_.push_back({name, "skipped", 0.0}); }

  void write(const fs::path& dir, bool complete) const {
    json stages = json::array();
    for (const auto& s : stages_) {
      stages.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}});
    }
    json m = {{"toolkit_version", toolkit_version()},
              {"config_sha256", sha256_hex(config_.dump())},
              {"seed", seed_},
              {"started", started_},
              {"finished", now_iso()},
              {"complete", complete},
              {"stages", std::move(stages)},
              {"artifacts", artifact_list(dir)}};
    write_text(dir, "manifest.json", m.dump(2) + "\n");
  }

 private:
  json config_;
  std::uint64_t seed_;
  std::string started_;
  std::vector<StageLog> stages_;
};

json config_to_json(const ExperimentConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) models.push_back(model_spec_to_json(m));
  json data;
  if (c.data.input) data["input"] = c.data.input->generic_string();
  if (c.data.synthetic) {
    data["synthetic"] = {{"n_major", c.data.synthetic->n_major},
                         {"n_minor", c.data.synthetic->n_minor},
                         {"separation", c.data.synthetic->separation},
                         {"schema", c.data.synthetic->schema == SyntheticSchema::kPaper ? "paper" : "reduced"}};
  }
  return {{"seed", c.seed},
          {"data", data},
          {"samplers", c.samplers},
          {"models", models},
          {"metrics", c.metrics},
          {"preprocess",
           {{"drop", c.preprocess.drop ? json(*c.preprocess.drop) : json("default")},
            {"dedup", c.preprocess.dedup},
            {"keep_negatives", c.preprocess.keep_negatives ? json(*c.preprocess.keep_negatives) : json()},
            {"test_fraction", c.preprocess.test_fraction},
            {"p_threshold", c.preprocess.p_threshold},
            {"drop_insignificant", c.preprocess.drop_insignificant}}},
          {"sampling",
           {{"smote_k", c.sampling.smote_k},
            {"adasyn_k", c.sampling.adasyn_k},
            {"enn_k", c.sampling.enn_k},
            {"metric", c.sampling.metric == Metric::kEuclidean ? "euclidean" : "manhattan"},
            {"xgbclus",
             {{"paper_faithful", c.sampling.paper_faithful},
              {"selector_fraction", c.sampling.selector_fraction},
              {"tmax0", c.sampling.xgbclus.tmax0},
              {"fmin0", c.sampling.xgbclus.fmin0},
              {"learner", params_to_json(c.sampling.xgbclus.learner)}}}}},
          {"shap",
           {{"enabled", c.shap.enabled},
            {"model", c.shap.model},
            {"sampler", c.shap.sampler},
            {"background", c.shap.background},
            {"instances", c.shap.instances},
            {"n_instances", c.shap.n_instances},
            {"n_coalitions", c.shap.n_coalitions}}},
          {"rules",
           {{"enabled", c.rules.enabled},
            {"sampler", c.rules.sampler},
            {"max_depth", c.rules.tree.max_depth},
            {"min_samples_leaf", c.rules.tree.min_samples_leaf},
            {"min_support", c.rules.params.min_support},
            {"min_confidence", c.rules.params.min_confidence},
            {"reference", c.rules.reference_test ? "test" : "train"}}}};
}

void write_metrics(const fs::path& dir, const ExperimentConfig& cfg, const std::vector<CellResult>& cells) {
  json rows = json::array();
  std::string csv = "sampler,model";
  for (const auto& m : cfg.metrics) csv += "," + m;
  csv += ",tp,fn,fp,tn\n";
  std::string confusion_csv = "sampler,model,tp,fn,fp,tn\n";
  for (const auto& c : cells) {
    json row = {{"sampler", c.sampler}, {"model", c.model}};
    csv += c.sampler + "," + c.model;
    for (const auto& m : cfg.metrics) {
      const auto v = metric_value(c, m);
      row[m] = opt_json(v);
      csv += "," + format_rate(v);
    }
    row["confusion"] = confusion_json(c.cm);
    rows.push_back(std::move(row));
    const auto counts = fmt::format("{},{},{},{}", c.cm.tp, c.cm.fn, c.cm.fp, c.cm.tn);
    csv += "," + counts + "\n";
    confusion_csv += c.sampler + "," + c.model + "," + counts + "\n";
    std::ostringstream roc;
    write_roc_csv(c.roc, roc);
    write_text(dir, "roc/" + safe_name(c.sampler) + "__" + safe_name(c.model) + ".csv", roc.str());
  }
  write_text(dir, "metrics.json", json{{"rows", rows}}.dump(2) + "\n");
  write_text(dir, "metrics.csv", csv);
  write_text(dir, "confusion.csv", confusion_csv);

  for (const auto& m : cfg.metrics) {
    std::string grid = "model";
    for (const auto& s : cfg.samplers) grid += "," + s;
    grid += "\n";
    for (const auto& spec : cfg.models) {
      grid += spec.name;
      for (const auto& s : cfg.samplers) {
        const auto it = std::find_if(cells.begin(), cells.end(), [&](const CellResult& c) {
          return c.sampler == s && c.model == spec.name;
        });
        grid += "," + format_rate(metric_value(*it, m));
      }
      grid += "\n";
    }
    write_text(dir, "grid_" + m + ".csv", grid);
  }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Manifest manifest(cfg, config_to_json(cfg));
  ExperimentSummary summary;
  try {
    const Dataset raw = manifest.stage("load", [&] { return load_input(cfg.data, cfg.seed); });
    const PreparedData prep = manifest.stage("prepare", [&] {
      auto p = prepare(raw, cfg.preprocess, cfg.seed);
      std::ostringstream t;
      write_ttest_csv(p.ttests, t);
      write_text(out_dir, "ttest.csv", t.str());
      return p;
    });
    const Dataset& train = prep.split.train;
    const Dataset& test = prep.split.test;

    std::vector<SampleOutcome> sampled(cfg.samplers.size());
    json balance = json::object();
    for (std::size_t s = 0; s < cfg.samplers.size(); ++s) {
      const auto& name = cfg.samplers[s];
      sampled[s] = manifest.stage("sample:" + name, [&] {
        return run_sampler(name, train, test, cfg.sampling, stage_seed(cfg.seed, "sampler." + name));
      });
      balance[name] = sampled[s].report.to_json();
      if (sampled[s].trace) write_text(out_dir, "xgbclus_trace.json", sampled[s].trace->to_json().dump(2) + "\n");
    }
    write_text(out_dir, "balance.json", balance.dump(2) + "\n");

    const std::size_t n_models = cfg.models.size();
    const std::size_t n_cells = cfg.samplers.size() * n_models;
    std::vector<CellResult> cells(n_cells);
    std::optional<Model> shap_model;
    manifest.stage("train+evaluate", [&] {
      std::vector<std::optional<Model>> keep(n_cells);
      parallel_for(n_cells, cfg.threads, [&](std::size_t cell) {
        const std::size_t s = cell / n_models;
        const auto& spec = cfg.models[cell % n_models];
        const auto& sampler = cfg.samplers[s];
        try {
          const Model model = fit_model(spec, sampled[s].data,
                                        stage_seed(cfg.seed, "model." + sampler + "." + spec.name));
          const auto probs = model.predict_proba(test);
          const auto labels = model.predict_labels(test);
          CellResult& r = cells[cell];
          r.sampler = sampler;
          r.model = spec.name;
          r.cm = confusion(test.labels(), labels);
          r.rates = rates(r.cm);
          if (test.count(0) > 0 && test.count(1) > 0) {
            auto roc = roc_auc(test.labels(), probs);
            r.auc = roc.auc;
            r.roc = std::move(roc.curve);
          }
          if (cfg.shap.enabled && sampler == cfg.shap.sampler && spec.name == cfg.shap.model) {
            keep[cell] = model;
          }
        } catch (const std::exception& e) {
          throw StageError("train:" + sampler + "/" + spec.name, e.what());
        }
      });
      for (auto& k : keep) {
        if (k) shap_model = std::move(k);
      }
      write_metrics(out_dir, cfg, cells);
    });
    summary.cells = cells;

    if (cfg.shap.enabled) {
      manifest.stage("explain", [&] {
        const std::size_t s = static_cast<std::size_t>(
            std::find(cfg.samplers.begin(), cfg.samplers.end(), cfg.shap.sampler) - cfg.samplers.begin());
        const Dataset bg = shap_background(sampled[s].data, cfg.shap.background, stage_seed(cfg.seed, "shap.background"));
        std::vector<std::size_t> instances = cfg.shap.instances;
        if (instances.empty()) {
          // Positives first so anomalous explanations are always present.
          for (Label c : {Label{1}, Label{0}}) {
            for (std::size_t i : test.indices_of(c)) {
              if (instances.size() < cfg.shap.n_instances) instances.push_back(i);
            }
          }
        }
        const ModelFn f = [&](std::span<const double> x) { return shap_model->predict_proba(x); };
        KernelShapParams kp;
        kp.n_coalitions = cfg.shap.n_coalitions;
        kp.threads = cfg.threads;
        std::vector<Attribution> attrs;
        json force = json::array();
        for (std::size_t i : instances) {
          if (i >= test.rows()) throw InvalidArgument("shap instance " + std::to_string(i) + " out of range");
          kp.seed = derive_seed(stage_seed(cfg.seed, "shap"), std::uint64_t{i});
          attrs.push_back(kernel_shap(f, test.row(i), bg.features(), kp));
          auto rec = force_record(attrs.back(), test.column_names(), test.row(i));
          rec["test_row"] = i;
          rec["label"] = test.label(i);
          force.push_back(std::move(rec));
        }
        std::string csv = "feature,mean_abs_shap\n";
        if (!attrs.empty()) {
          for (const auto& g : global_importance(attrs, test.column_names())) csv += fmt::format("{},{}\n", g.feature, g.value);
        }
        write_text(out_dir, "shap_global.csv", csv);
        write_text(out_dir, "shap_force.json",
                   json{{"model", cfg.shap.model}, {"sampler", cfg.shap.sampler}, {"records", force}}.dump(2) + "\n");
      });
    } else {
      manifest.skip("explain");
    }

    if (cfg.rules.enabled) {
      manifest.stage("rules", [&] {
        const std::size_t s = static_cast<std::size_t>(
            std::find(cfg.samplers.begin(), cfg.samplers.end(), cfg.rules.sampler) - cfg.samplers.begin());
        const Dataset& fit_on = sampled[s].data;
        const TreeModel tree = fit_tree(fit_on, cfg.rules.tree);
        const Dataset& reference = cfg.rules.reference_test ? test : fit_on;
        const auto rules = extract_rules(tree, reference, cfg.rules.params);
        write_text(out_dir, "rules.json", rules_json(rules).dump(2) + "\n");
        write_text(out_dir, "rules.txt", rules_table(rules));
        std::string csv = "feature,importance\n";
        for (const auto& imp : gini_importances(tree)) csv += fmt::format("{},{}\n", imp.feature, imp.value);
        write_text(out_dir, "importance.csv", csv);
        write_text(out_dir, "rules_tree.json", tree_to_json(tree).dump() + "\n");
      });
    } else {
      manifest.skip("rules");
    }
  } catch (...) {
    manifest.write(out_dir, false);
    throw;
  }
  manifest.write(out_dir, true);
  for (const auto& a : artifact_list(out_dir)) summary.artifacts.push_back(a.at("path").get<std::string>());
  summary.artifacts.push_back("manifest.json");
  return summary;
}

}  // namespace txanomaly
