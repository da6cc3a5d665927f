#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/dataset.hpp"
#include "txanomaly/ensemble.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/knn.hpp"
#include "txanomaly/metrics.hpp"
#include "txanomaly/rules.hpp"
#include "txanomaly/sampling.hpp"
#include "txanomaly/xgbclus.hpp"

namespace txanomaly {

std::string toolkit_version();

// A failure inside one pipeline stage; the CLI exits with code 3.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

const std::vector<std::string>& sampler_names();
const std::vector<std::string>& metric_names();

struct SyntheticSpec {
  std::size_t n_major = 20000;
  std::size_t n_minor = 20;
  double separation = 3.0;
  SyntheticSchema schema = SyntheticSchema::kReduced;
};

struct DataConfig {
  std::optional<std::filesystem::path> input;
  std::optional<SyntheticSpec> synthetic;
};

struct PreprocessConfig {
  // nullopt applies the default policy to whichever of its columns exist.
  std::optional<std::vector<std::string>> drop;
  bool dedup = true;
  std::optional<std::size_t> keep_negatives;
  double test_fraction = 0.2;
  double p_threshold = 0.01;
  bool drop_insignificant = false;
};

struct SamplingConfig {
  std::size_t smote_k = 5;
  std::size_t adasyn_k = 5;
  std::size_t enn_k = 3;
  Metric metric = Metric::kEuclidean;
  // Scores XGBCLUS candidates on the test split instead of a held-out slice
  // of train.
  bool paper_faithful = false;
  double selector_fraction = 0.2;
  XgbclusParams xgbclus;
};

struct ShapConfig {
  bool enabled = false;
  std::string model;
  std::string sampler = "none";
  std::size_t background = 100;
  std::vector<std::size_t> instances;  // test-row indices; empty = first n_instances
  std::size_t n_instances = 10;
  std::size_t n_coalitions = 4096;
};

struct RulesConfig {
  bool enabled = false;
  std::string sampler = "none";
  TreeParams tree;
  RuleParams params;
  bool reference_test = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  PreprocessConfig preprocess;
  std::vector<std::string> samplers{"none"};
  SamplingConfig sampling;
  std::vector<ModelSpec> models;
  std::vector<std::string> metrics = metric_names();
  ShapConfig shap;
  RulesConfig rules;
  unsigned threads = 1;
  std::optional<std::filesystem::path> output_dir;
};

// Strict: unknown keys, unknown sampler names and missing required fields
// raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct TTestRow {
  TTestResult result;
  bool defined = true;
};

struct PreparedData {
  Dataset data;  // after selection, dedup and capping
  std::vector<TTestRow> ttests;
  std::vector<std::string> dropped;
  SplitPair split;
};

Dataset load_input(const DataConfig& data, std::uint64_t seed);
PreparedData prepare(const Dataset& raw, const PreprocessConfig& cfg, std::uint64_t seed);
void write_ttest_csv(const std::vector<TTestRow>& rows, std::ostream& out);

struct SampleOutcome {
  Dataset data;
  BalanceReport report;
  std::optional<XgbclusTrace> trace;
};

// `test` is only consulted by xgbclus in paper-faithful mode.
SampleOutcome run_sampler(const std::string& name, const Dataset& train, const Dataset& test,
                          const SamplingConfig& cfg, std::uint64_t seed);

struct CellResult {
  std::string sampler;
  std::string model;
  ConfusionMatrix cm;
  Rates rates;
  std::optional<double> auc;
  RocCurve roc;
};

struct ExperimentSummary {
  std::vector<CellResult> cells;
  std::vector<std::string> artifacts;
};

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Seed of a named stage: derive_seed(root, name).
std::uint64_t stage_seed(std::uint64_t root, const std::string& name);

// Writes `text` to out_dir / rel, creating parent directories.
void write_text(const std::filesystem::path& out_dir, const std::string& rel, const std::string& text);

// Every regular file under `dir` except manifest.json, with its SHA-256.
nlohmann::json artifact_list(const std::filesystem::path& dir);

}  // namespace txanomaly
