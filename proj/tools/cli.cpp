#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "txanomaly/digest.hpp"
#include "txanomaly/ensemble.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/experiment.hpp"
#include "txanomaly/explain.hpp"
#include "txanomaly/metrics.hpp"
#include "txanomaly/random.hpp"
#include "txanomaly/rules.hpp"
#include "txanomaly/sampling.hpp"

namespace txanomaly::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
  std::string input;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--seed", c.seed, "root seed")->each([&c](const std::string&) { c.seed_given = true; });
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  cmd->add_option("--input", c.input, "input CSV");
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("model '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

void check_schema(const Model& m, const Dataset& d) {
  if (m.feature_names != d.column_names()) {
    std::string want;
    for (const auto& n : m.feature_names) want += (want.empty() ? "" : ",") + n;
    throw SchemaError("data columns do not match the model's features (" + want + ")");
  }
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed) {
  const json m = {{"toolkit_version", toolkit_version()},
                  {"command", command},
                  {"seed", seed},
                  {"complete", true},
                  {"artifacts", artifact_list(dir)}};
  write_text(dir, "manifest.json", m.dump(2) + "\n");
}

std::string csv_of(const Dataset& d) {
  std::ostringstream s;
  write_csv(d, s);
  return s.str();
}

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw ConfigError("bad instance index '" + item + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  Common c;
  std::string synthetic;
  std::optional<std::size_t> keep_negatives;
  std::optional<double> p_threshold;
  bool drop_insignificant = false;
  bool no_dedup = false;
  std::optional<double> test_fraction;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out, std::ostream& err) {
  require(a.c.out_dir, "--out-dir");
  DataConfig data;
  PreprocessConfig pre;
  std::uint64_t seed = a.c.seed;
  if (!a.c.config.empty()) {
    const auto cfg = load_config(a.c.config);
    data = cfg.data;
    pre = cfg.preprocess;
    if (!a.c.seed_given) seed = cfg.seed;
  }
  if (!a.c.input.empty()) data = DataConfig{fs::path(a.c.input), std::nullopt};
  if (!a.synthetic.empty()) {
    SyntheticSpec s;
    std::vector<std::string> parts;
    std::stringstream ss(a.synthetic);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    if (parts.size() < 3 || parts.size() > 4) {
      throw ConfigError("--synthetic expects N_MAJOR,N_MINOR,SEPARATION[,paper|reduced]");
    }
    try {
      s.n_major = std::stoul(parts[0]);
      s.n_minor = std::stoul(parts[1]);
      s.separation = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("--synthetic values must be numeric");
    }
    if (parts.size() == 4) {
      if (parts[3] != "paper" && parts[3] != "reduced") throw ConfigError("--synthetic schema must be paper or reduced");
      s.schema = parts[3] == "paper" ? SyntheticSchema::kPaper : SyntheticSchema::kReduced;
    }
    data = DataConfig{std::nullopt, s};
  }
  if (!data.input && !data.synthetic) throw ConfigError("prepare needs --input, --synthetic or --config");
  if (a.keep_negatives) pre.keep_negatives = a.keep_negatives;
  if (a.drop_insignificant) pre.drop_insignificant = true;
  if (a.no_dedup) pre.dedup = false;
  if (a.p_threshold) pre.p_threshold = *a.p_threshold;
  if (a.test_fraction) pre.test_fraction = *a.test_fraction;

  const Dataset raw = load_input(data, seed);
  const auto prep = prepare(raw, pre, seed);
  const fs::path dir = a.c.out_dir;
  fs::create_directories(dir);
  write_text(dir, "prepared.csv", csv_of(prep.data));
  write_text(dir, "train.csv", csv_of(prep.split.train));
  write_text(dir, "test.csv", csv_of(prep.split.test));
  std::ostringstream t;
  write_ttest_csv(prep.ttests, t);
  write_text(dir, "ttest.csv", t.str());
  try {
    const auto corr = pearson_correlation(prep.data);
    std::ostringstream c;
    write_correlation_csv(prep.data, corr, c);
    write_text(dir, "correlation.csv", c.str());
  } catch (const DegenerateInput& e) {
    err << "warning: correlation matrix skipped: " << e.what() << "\n";
  }
  write_manifest(dir, "prepare", seed);
  out << fmt::format("prepared {} rows ({} positive), {} features; train {} / test {}\n", prep.data.rows(),
                     prep.data.count(1), prep.data.cols(), prep.split.train.rows(), prep.split.test.rows());
  return kExitOk;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  Common c;
  std::string sampler;
  std::string eval;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  require(a.c.input, "--input");
  require(a.c.out_dir, "--out-dir");
  SamplingConfig sc;
  std::uint64_t seed = a.c.seed;
  if (!a.c.config.empty()) {
    const auto cfg = load_config(a.c.config);
    sc = cfg.sampling;
    if (!a.c.seed_given) seed = cfg.seed;
  }
  const Dataset train = load_csv(a.c.input);
  Dataset eval;
  if (!a.eval.empty()) {
    eval = load_csv(a.eval);
    sc.paper_faithful = true;
  } else if (a.sampler == "xgbclus" && sc.paper_faithful) {
    throw ConfigError("paper-faithful xgbclus needs --eval");
  }
  const auto r = run_sampler(a.sampler, train, eval, sc, stage_seed(seed, "sampler." + a.sampler));
  const fs::path dir = a.c.out_dir;
  fs::create_directories(dir);
  write_text(dir, "sampled.csv", csv_of(r.data));
  write_text(dir, "balance.json", r.report.to_json().dump(2) + "\n");
  if (r.trace) write_text(dir, "xgbclus_trace.json", r.trace->to_json().dump(2) + "\n");
  write_manifest(dir, "sample", seed);
  out << fmt::format("{}: {} rows -> {} rows ({} positive)\n", a.sampler, train.rows(), r.data.rows(),
                     r.data.count(1));
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common c;
  std::string kind;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  require(a.c.input, "--input");
  require(a.c.out_dir, "--out-dir");
  ModelSpec spec;
  if (!a.c.config.empty()) {
    spec = model_spec_from_json(read_json(a.c.config));
  } else {
    require(a.kind, "--model or --config");
    spec = model_spec_from_json(json{{"kind", a.kind}});
  }
  const Dataset train = load_csv(a.c.input);
  const Model m = fit_model(spec, train, stage_seed(a.c.seed, "model." + spec.name));
  const fs::path dir = a.c.out_dir;
  fs::create_directories(dir);
  write_text(dir, "model.json", model_to_json(m).dump() + "\n");
  write_manifest(dir, "train", a.c.seed);
  out << fmt::format("trained {} on {} rows\n", spec.kind, train.rows());
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct ModelArgs {
  Common c;
  std::string model;
};

int cmd_evaluate(const ModelArgs& a, std::ostream& out) {
  require(a.model, "--model");
  require(a.c.input, "--input");
  require(a.c.out_dir, "--out-dir");
  const Model m = load_model(a.model);
  const Dataset test = load_csv(a.c.input);
  check_schema(m, test);
  const auto cm = confusion(test.labels(), m.predict_labels(test));
  const auto r = rates(cm);
  json row = rates_json(r);
  row["confusion"] = confusion_json(cm);
  row["auc"] = "undefined";
  const fs::path dir = a.c.out_dir;
  fs::create_directories(dir);
  if (test.count(0) > 0 && test.count(1) > 0) {
    const auto roc = roc_auc(test.labels(), m.predict_proba(test));
    row["auc"] = roc.auc;
    std::ostringstream s;
    write_roc_csv(roc.curve, s);
    write_text(dir, "roc.csv", s.str());
  }
  write_text(dir, "metrics.json", row.dump(2) + "\n");
  write_text(dir, "confusion.csv", fmt::format("tp,fn,fp,tn\n{},{},{},{}\n", cm.tp, cm.fn, cm.fp, cm.tn));
  write_manifest(dir, "evaluate", a.c.seed);
  out << fmt::format("accuracy {} tpr {} fpr {} tnr {}\n", format_rate(r.accuracy), format_rate(r.tpr),
                     format_rate(r.fpr), format_rate(r.tnr));
  return kExitOk;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  ModelArgs m;
  std::string background_input;
  std::string instances;
  std::size_t background = 100;
  std::size_t n_coalitions = 4096;
};

int cmd_explain(const ExplainArgs& a, std::ostream& out) {
  require(a.m.model, "--model");
  require(a.m.c.input, "--input");
  require(a.m.c.out_dir, "--out-dir");
  const Model model = load_model(a.m.model);
  const Dataset data = load_csv(a.m.c.input);
  check_schema(model, data);
  const Dataset bg_source = a.background_input.empty() ? data : load_csv(a.background_input);
  check_schema(model, bg_source);
  const Dataset bg = shap_background(bg_source, a.background, stage_seed(a.m.c.seed, "shap.background"));
  auto instances = parse_indices(a.instances);
  if (instances.empty()) {
    for (std::size_t i = 0; i < std::min<std::size_t>(data.rows(), 10); ++i) instances.push_back(i);
  }
  const ModelFn f = [&](std::span<const double> x) { return model.predict_proba(x); };
  std::vector<Attribution> attrs;
  json records = json::array();
  for (std::size_t i : instances) {
    if (i >= data.rows()) throw InvalidArgument("instance " + std::to_string(i) + " out of range");
    KernelShapParams kp;
    kp.n_coalitions = a.n_coalitions;
    kp.seed = derive_seed(stage_seed(a.m.c.seed, "shap"), std::uint64_t{i});
    attrs.push_back(kernel_shap(f, data.row(i), bg.features(), kp));
    auto rec = force_record(attrs.back(), data.column_names(), data.row(i));
    rec["row"] = i;
    records.push_back(std::move(rec));
  }
  const fs::path dir = a.m.c.out_dir;
  fs::create_directories(dir);
  std::string csv = "feature,mean_abs_shap\n";
  for (const auto& g : global_importance(attrs, data.column_names())) csv += fmt::format("{},{}\n", g.feature, g.value);
  write_text(dir, "shap_global.csv", csv);
  write_text(dir, "shap_force.json", json{{"records", records}}.dump(2) + "\n");
  write_manifest(dir, "explain", a.m.c.seed);
  out << fmt::format("explained {} instances\n", attrs.size());
  return kExitOk;
}

// ---------------------------------------------------------------- rules

struct RulesArgs {
  ModelArgs m;
  std::string reference;
  std::size_t max_depth = 10;
  std::size_t min_support = 5;
  double min_confidence = 0.9;
};

int cmd_rules(const RulesArgs& a, std::ostream& out) {
  require(a.m.c.input, "--input");
  require(a.m.c.out_dir, "--out-dir");
  const Dataset data = load_csv(a.m.c.input);
  TreeModel tree;
  if (!a.m.model.empty()) {
    const Model m = load_model(a.m.model);
    check_schema(m, data);
    const auto* l = std::get_if<LearnerModel>(&m.impl);
    if (!l || !std::holds_alternative<TreeModel>(*l)) {
      throw SchemaError("rules need a decision-tree model, got '" + m.kind + "'");
    }
    tree = std::get<TreeModel>(*l);
  } else {
    TreeParams tp;
    tp.max_depth = a.max_depth;
    tree = fit_tree(data, tp);
  }
  const Dataset reference = a.reference.empty() ? data : load_csv(a.reference);
  RuleParams rp;
  rp.min_support = a.min_support;
  rp.min_confidence = a.min_confidence;
  const auto rules = extract_rules(tree, reference, rp);
  const fs::path dir = a.m.c.out_dir;
  fs::create_directories(dir);
  write_text(dir, "rules.json", rules_json(rules).dump(2) + "\n");
  write_text(dir, "rules.txt", rules_table(rules));
  std::string csv = "feature,importance\n";
  for (const auto& imp : gini_importances(tree)) csv += fmt::format("{},{}\n", imp.feature, imp.value);
  write_text(dir, "importance.csv", csv);
  write_manifest(dir, "rules", a.m.c.seed);
  out << rules_table(rules);
  return kExitOk;
}

// ---------------------------------------------------------------- experiment

int cmd_experiment(const Common& c, std::ostream& out) {
  require(c.config, "--config");
  auto cfg = load_config(c.config);
  if (c.seed_given) cfg.seed = c.seed;
  fs::path dir;
  if (!c.out_dir.empty()) {
    dir = c.out_dir;
  } else if (cfg.output_dir) {
    dir = *cfg.output_dir;
  } else {
    throw ConfigError("experiment needs --out-dir or an output_dir in the config");
  }
  if (!c.input.empty()) cfg.data = DataConfig{fs::path(c.input), std::nullopt};
  const auto summary = run_experiment(cfg, dir);
  out << fmt::format("{} cells, {} artifacts written to {}\n", summary.cells.size(), summary.artifacts.size(),
                     dir.string());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Imbalanced transaction anomaly toolkit", "txanomaly"};
  app.require_subcommand(1);
  app.set_version_flag("--version", toolkit_version());

  PrepareArgs prep;
  auto* prepare_cmd = app.add_subcommand("prepare", "feature selection, dedup, split, t-tests, correlation");
  add_common(prepare_cmd, prep.c);
  prepare_cmd->add_option("--synthetic", prep.synthetic, "N_MAJOR,N_MINOR,SEPARATION[,paper|reduced]");
  prepare_cmd->add_option("--keep-negatives", prep.keep_negatives, "cap negatives after dedup");
  prepare_cmd->add_option("--p-threshold", prep.p_threshold, "t-test significance level");
  prepare_cmd->add_flag("--drop-insignificant", prep.drop_insignificant, "also drop features with p >= threshold");
  prepare_cmd->add_flag("--no-dedup", prep.no_dedup, "keep duplicate negatives");
  prepare_cmd->add_option("--test-fraction", prep.test_fraction, "held-out fraction");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "rebalance a training CSV");
  add_common(sample_cmd, sample.c);
  sample_cmd->add_option("--sampler", sample.sampler, "sampler name")
      ->required()
      ->check(CLI::IsMember(sampler_names()));
  sample_cmd->add_option("--eval", sample.eval, "xgbclus selector CSV (paper-faithful mode)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "fit a model");
  add_common(train_cmd, train.c);
  train_cmd->add_option("--model", train.kind, "dt, rf, gb, xgb, adaboost, lr, stacked or voting");

  ModelArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a model on a labelled CSV");
  add_common(eval_cmd, eval.c);
  eval_cmd->add_option("--model", eval.model, "model JSON");

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "KernelSHAP attributions");
  add_common(explain_cmd, explain.m.c);
  explain_cmd->add_option("--model", explain.m.model, "model JSON");
  explain_cmd->add_option("--background-input", explain.background_input, "CSV to draw the background from");
  explain_cmd->add_option("--instances", explain.instances, "comma-separated row indices");
  explain_cmd->add_option("--background", explain.background, "background rows");
  explain_cmd->add_option("--n-coalitions", explain.n_coalitions, "coalition budget");

  RulesArgs rules;
  auto* rules_cmd = app.add_subcommand("rules", "anomaly rules and Gini importances from a tree");
  add_common(rules_cmd, rules.m.c);
  rules_cmd->add_option("--model", rules.m.model, "decision-tree model JSON (fit on --input if omitted)");
  rules_cmd->add_option("--reference", rules.reference, "CSV for support/confidence (default --input)");
  rules_cmd->add_option("--max-depth", rules.max_depth, "depth when fitting a tree");
  rules_cmd->add_option("--min-support", rules.min_support, "minimum rule support");
  rules_cmd->add_option("--min-confidence", rules.min_confidence, "minimum rule confidence");

  Common exp;
  auto* exp_cmd = app.add_subcommand("experiment", "run a configured sampler x model grid");
  add_common(exp_cmd, exp);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::string stage = "cli";
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (prepare_cmd->parsed()) return stage = "prepare", cmd_prepare(prep, out, err);
    if (sample_cmd->parsed()) return stage = "sample", cmd_sample(sample, out);
    if (train_cmd->parsed()) return stage = "train", cmd_train(train, out);
    if (eval_cmd->parsed()) return stage = "evaluate", cmd_evaluate(eval, out);
    if (explain_cmd->parsed()) return stage = "explain", cmd_explain(explain, out);
    if (rules_cmd->parsed()) return stage = "rules", cmd_rules(rules, out);
    if (exp_cmd->parsed()) return stage = "experiment", cmd_experiment(exp, out);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << toolkit_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error in stage '" << stage << "': " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace txanomaly::cli
