#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "tempdir.hpp"
#include "txanomaly/dataset.hpp"

namespace cli = txanomaly::cli;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "txanomaly");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, cli::kExitUsage);
  EXPECT_EQ(call({"prepare", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"prepare", "--out-dir", "x"}).code, cli::kExitUsage);
  EXPECT_EQ(call({"--version"}).code, cli::kExitOk);
}

TEST(Cli, BadConfigIsUsageError) {
  TempDir dir("cli_badcfg");
  spit(dir / "c.json", R"({"seed": 1, "data": {"synthetic": {}}, "models": [{"kind": "dt"}], "extra": 1})");
  const auto r = call({"experiment", "--config", (dir / "c.json").string(), "--out-dir", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("extra"), std::string::npos);
}

TEST(Cli, StageFailureIsRuntimeError) {
  TempDir dir("cli_stage");
  spit(dir / "c.json", R"({"seed": 1,
    "data": {"synthetic": {"n_major": 300, "n_minor": 20, "separation": 3.0}},
    "samplers": ["xgbclus"], "sampling": {"xgbclus": {"tmax0": 100000}},
    "models": [{"kind": "dt"}]})");
  const auto r = call({"experiment", "--config", (dir / "c.json").string(), "--out-dir", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("sample:xgbclus"), std::string::npos);
  const auto m = json::parse(slurp(dir / "o" / "manifest.json"));
  EXPECT_FALSE(m["complete"].get<bool>());
}

TEST(Cli, PrepareSyntheticFullSchema) {
  TempDir dir("cli_prep");
  const auto a = dir / "a", b = dir / "b";
  const std::vector<std::string> args = {"prepare", "--synthetic", "2000,30,3.0,paper", "--keep-negatives", "500",
                                         "--seed", "4", "--out-dir"};
  auto args_a = args, args_b = args;
  args_a.push_back(a.string());
  args_b.push_back(b.string());
  ASSERT_EQ(call(args_a).code, cli::kExitOk);
  ASSERT_EQ(call(args_b).code, cli::kExitOk);
  const auto prepared = txanomaly::load_csv(a / "prepared.csv");
  EXPECT_EQ(prepared.cols(), 6u);
  EXPECT_EQ(prepared.count(0), 500u);
  EXPECT_EQ(prepared.count(1), 30u);
  for (const char* f : {"prepared.csv", "train.csv", "test.csv", "ttest.csv", "correlation.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_TRUE(json::parse(slurp(a / "manifest.json"))["complete"].get<bool>());
}

TEST(Cli, SampleTrainEvaluateFlow) {
  TempDir dir("cli_flow");
  ASSERT_EQ(call({"prepare", "--synthetic", "1500,40,3.0", "--seed", "2", "--out-dir", dir.path().string()}).code,
            cli::kExitOk);
  const auto s = dir / "s";
  ASSERT_EQ(call({"sample", "--sampler", "rus", "--input", (dir / "train.csv").string(), "--out-dir", s.string()}).code,
            cli::kExitOk);
  const auto sampled = txanomaly::load_csv(s / "sampled.csv");
  EXPECT_EQ(sampled.count(0), sampled.count(1));
  EXPECT_EQ(call({"sample", "--sampler", "gan", "--input", (dir / "train.csv").string(), "--out-dir", s.string()}).code,
            cli::kExitUsage);

  const auto m = dir / "m";
  ASSERT_EQ(call({"train", "--model", "dt", "--input", (s / "sampled.csv").string(), "--out-dir", m.string()}).code,
            cli::kExitOk);
  const auto e = dir / "e";
  const auto r = call({"evaluate", "--model", (m / "model.json").string(), "--input", (dir / "test.csv").string(),
                       "--out-dir", e.string()});
  ASSERT_EQ(r.code, cli::kExitOk);
  const auto metrics = json::parse(slurp(e / "metrics.json"));
  EXPECT_GE(metrics["tpr"].get<double>(), 0.5);
  EXPECT_EQ(first_line(slurp(e / "roc.csv")), "threshold,fpr,tpr");
}

TEST(Cli, SchemaMismatchIsUsageError) {
  TempDir dir("cli_schema");
  ASSERT_EQ(call({"prepare", "--synthetic", "400,20,3.0", "--out-dir", (dir / "r").string()}).code, cli::kExitOk);
  ASSERT_EQ(call({"prepare", "--synthetic", "400,20,3.0,paper", "--out-dir", (dir / "p").string(),
                  "--no-dedup"}).code,
            cli::kExitOk);
  ASSERT_EQ(call({"train", "--model", "dt", "--input", (dir / "r" / "train.csv").string(), "--out-dir",
                  (dir / "m").string()}).code,
            cli::kExitOk);
  // Same reduced column count after selection, so corrupt the header instead.
  auto text = slurp(dir / "r" / "test.csv");
  text.replace(0, text.find(','), "renamed");
  spit(dir / "bad.csv", text);
  const auto r = call({"explain", "--model", (dir / "m" / "model.json").string(), "--input", (dir / "bad.csv").string(),
                       "--out-dir", (dir / "x").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST(Cli, ExplainConstantModelGivesZeroAttributions) {
  TempDir dir("cli_explain");
  std::string csv = "a,b,c,label\n";
  for (int i = 0; i < 30; ++i) csv += std::to_string(i) + "," + std::to_string(i % 7) + "," + std::to_string(i % 3) + ",0\n";
  spit(dir / "zero.csv", csv);
  ASSERT_EQ(call({"train", "--model", "dt", "--input", (dir / "zero.csv").string(), "--out-dir",
                  (dir / "m").string()}).code,
            cli::kExitOk);
  ASSERT_EQ(call({"explain", "--model", (dir / "m" / "model.json").string(), "--input", (dir / "zero.csv").string(),
                  "--instances", "0,5,29", "--background", "10", "--out-dir", (dir / "x").string()}).code,
            cli::kExitOk);
  const auto force = json::parse(slurp(dir / "x" / "shap_force.json"));
  ASSERT_EQ(force["records"].size(), 3u);
  EXPECT_EQ(force["records"][1]["row"], 5);
  for (const auto& rec : force["records"]) {
    for (const auto& f : rec["features"]) EXPECT_EQ(f["phi"].get<double>(), 0.0);
  }
  EXPECT_EQ(first_line(slurp(dir / "x" / "shap_global.csv")), "feature,mean_abs_shap");
}

TEST(Cli, RulesFromFittedTree) {
  TempDir dir("cli_rules");
  std::string csv = "total_btc,mean_in_btc,label\n";
  for (int i = 0; i < 40; ++i) csv += std::to_string(i * 10) + ".5," + std::to_string(i % 4) + "," + (i >= 30 ? "1" : "0") + "\n";
  spit(dir / "d.csv", csv);
  const auto r = call({"rules", "--input", (dir / "d.csv").string(), "--min-support", "5", "--out-dir",
                       (dir / "o").string()});
  ASSERT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("total_btc > 295.500 | anomalous | 10 | 10 | 100%"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(dir / "o" / "rules.txt"), r.out);
  EXPECT_EQ(first_line(slurp(dir / "o" / "importance.csv")), "feature,importance");

  std::string flat = "x,label\n1,0\n2,0\n3,0\n";
  spit(dir / "flat.csv", flat);
  const auto none = call({"rules", "--input", (dir / "flat.csv").string(), "--out-dir", (dir / "f").string()});
  ASSERT_EQ(none.code, cli::kExitOk);
  EXPECT_NE(none.out.find("no qualifying rules"), std::string::npos);
}

TEST(Cli, RulesRejectNonTreeModel) {
  TempDir dir("cli_rules_lr");
  std::string csv = "x,label\n";
  for (int i = 0; i < 20; ++i) csv += std::to_string(i) + "," + (i > 10 ? "1" : "0") + "\n";
  spit(dir / "d.csv", csv);
  ASSERT_EQ(call({"train", "--model", "lr", "--input", (dir / "d.csv").string(), "--out-dir",
                  (dir / "m").string()}).code,
            cli::kExitOk);
  EXPECT_EQ(call({"rules", "--model", (dir / "m" / "model.json").string(), "--input", (dir / "d.csv").string(),
                  "--out-dir", (dir / "o").string()}).code,
            cli::kExitUsage);
}

TEST(Cli, ExperimentDeterministicAcrossRuns) {
  TempDir dir("cli_exp");
  const std::string cfg = std::string(TXA_SOURCE_DIR) + "/configs/smoke.json";
  ASSERT_EQ(call({"experiment", "--config", cfg, "--out-dir", (dir / "a").string()}).code, cli::kExitOk);
  ASSERT_EQ(call({"experiment", "--config", cfg, "--out-dir", (dir / "b").string()}).code, cli::kExitOk);
  for (const char* f : {"metrics.json", "metrics.csv", "shap_global.csv", "rules.txt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const auto c = call({"experiment", "--config", cfg, "--seed", "99", "--out-dir", (dir / "c").string()});
  ASSERT_EQ(c.code, cli::kExitOk);
  EXPECT_EQ(json::parse(slurp(dir / "c" / "manifest.json"))["seed"], 99);
}
