#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "oracles.hpp"
#include "txanomaly/dataset.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/learner.hpp"
#include "txanomaly/metrics.hpp"

using namespace txanomaly;

namespace {

std::string header_line() {
  std::string h;
  for (const auto& c : paper_schema()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::multiset<std::vector<double>> row_multiset(const Dataset& d) {
  std::multiset<std::vector<double>> out;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::vector<double> r(d.row(i).begin(), d.row(i).end());
    r.push_back(d.label(i));
    out.insert(r);
  }
  return out;
}

}  // namespace

TEST(Csv, FullSchemaThreeRows) {
  EXPECT_EQ(paper_schema().size(), 12u);
  std::stringstream in;
  in << header_line() << "\n";
  for (int i = 0; i < 3; ++i) in << "1,2,3,4,5,6,7,0,0,0,0," << (i == 1) << "\n";
  const Dataset d = read_csv(in, paper_schema());
  EXPECT_EQ(d.rows(), 3u);
  EXPECT_EQ(d.cols(), 11u);
  EXPECT_EQ(d.count(1), 1u);
}

TEST(Csv, FullSchemaHeader) {
  EXPECT_EQ(header_line(),
            "indegree,outdegree,in_btc,out_btc,total_btc,mean_in_btc,mean_out_btc,in_malicious,"
            "out_malicious,is_malicious,all_malicious,out_and_tx_malicious");
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  std::stringstream in;
  in << "a,b,out_and_tx_malicious\n";
  for (int i = 1; i <= 8; ++i) in << (i == 7 ? "1,oops,0" : "1,2,0") << "\n";
  try {
    read_csv(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 7u);
    EXPECT_EQ(e.column(), "b");
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(Csv, HeaderMismatchIsSchemaError) {
  std::stringstream in("x,y,out_and_tx_malicious\n1,2,0\n");
  EXPECT_THROW(read_csv(in, reduced_schema()), SchemaError);
}

TEST(Csv, BadLabelRejected) {
  std::stringstream in("x,out_and_tx_malicious\n1,2\n");
  EXPECT_THROW(read_csv(in), SchemaError);
}

TEST(Csv, AnomalousRowRoundTrips) {
  const std::vector<double> row{7, 2902, 2902, 5804, 414.6, 1451};
  Dataset d(std::vector<std::string>(reduced_schema().begin(), reduced_schema().end() - 1), row,
            {1});
  std::stringstream out;
  write_csv(d, out);
  const Dataset back = read_csv(out, reduced_schema());
  EXPECT_EQ(back, d);
  std::stringstream again;
  write_csv(back, again);
  std::stringstream first;
  write_csv(d, first);
  EXPECT_EQ(first.str(), again.str());
}

TEST(Csv, RoundTripRandomValuesExact) {
  Rng rng(3);
  const Dataset d = gen::dataset(rng, 40, 5, false);
  std::stringstream s;
  write_csv(d, s);
  const Dataset back = read_csv(s);
  EXPECT_EQ(back.values().size(), d.values().size());
  for (std::size_t i = 0; i < d.values().size(); ++i) EXPECT_EQ(back.values()[i], d.values()[i]);
}

TEST(DatasetInvariants, RejectsBadShapes) {
  EXPECT_THROW(Dataset({"a", "a"}, {1, 2}, {0}), SchemaError);
  EXPECT_THROW(Dataset({"a"}, {1, 2}, {0}), InvalidArgument);
  EXPECT_THROW(Dataset({"a"}, {NAN}, {0}), InvalidArgument);
  EXPECT_THROW(Dataset({"a"}, {1}, {2}), InvalidArgument);
}

TEST(Welch, HandCase) {
  const std::vector<double> a{2, 4, 6}, b{1, 3, 5};
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.t_value, 0.6123724356957945, 1e-12);
  EXPECT_NEAR(r.degrees_of_freedom, 4.0, 1e-12);
}

TEST(Welch, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3};
  const auto r = welch_t_test(a, a);
  EXPECT_EQ(r.t_value, 0.0);
  EXPECT_NEAR(r.p_value, 1.0, 1e-15);
}

TEST(Welch, ConstantEqualGroupsDegenerate) {
  const std::vector<double> a{2, 2, 2};
  EXPECT_THROW(welch_t_test(a, a), DegenerateInput);
}

TEST(Welch, SeparatedNormalsSignificant) {
  std::mt19937_64 eng(11);
  std::normal_distribution<double> n0(0, 1), n5(5, 1);
  std::vector<double> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(n0(eng));
    b.push_back(n5(eng));
  }
  EXPECT_LT(welch_t_test(a, b).p_value, 0.001);
}

TEST(Welch, PValueMatchesQuadrature) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a, b;
    const std::size_t na = 3 + uniform_index(rng, 10), nb = 3 + uniform_index(rng, 10);
    for (std::size_t i = 0; i < na; ++i) a.push_back(uniform_unit(rng) * 3);
    for (std::size_t i = 0; i < nb; ++i) b.push_back(uniform_unit(rng) * 2 + 0.5);
    const auto r = welch_t_test(a, b);
    EXPECT_NEAR(r.p_value, oracle::t_two_tailed(r.t_value, r.degrees_of_freedom), 1e-7);
  }
}

TEST(Welch, AntisymmetricProperty) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 6; ++i) a.push_back(uniform_unit(rng));
    for (int i = 0; i < 9; ++i) b.push_back(uniform_unit(rng) + 0.2);
    const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
    EXPECT_EQ(ab.t_value, -ba.t_value);
    EXPECT_NEAR(ab.p_value, ba.p_value, 1e-14);
  }
}

TEST(SelectFeatures, DefaultPolicyYieldsReducedColumns) {
  std::vector<std::string> feats(paper_schema().begin(), paper_schema().end() - 1);
  Dataset d(feats, std::vector<double>(11 * 2, 1.0), {0, 1});
  const Dataset r = select_features(d, default_drop_policy());
  std::vector<std::string> expect{"indegree",  "in_btc",      "out_btc",
                                  "total_btc", "mean_in_btc", "mean_out_btc"};
  EXPECT_EQ(r.column_names(), expect);
  EXPECT_EQ(r.label_name(), "out_and_tx_malicious");
  EXPECT_EQ(r.rows(), 2u);
}

TEST(SelectFeatures, EmptyDropIsIdentity) {
  Rng rng(1);
  const Dataset d = gen::dataset(rng, 10, 3, true);
  EXPECT_EQ(select_features(d, {}), d);
}

TEST(SelectFeatures, UnknownNameRejected) {
  Rng rng(1);
  const Dataset d = gen::dataset(rng, 10, 3, true);
  const std::vector<std::string> drop{"nope"};
  EXPECT_THROW(select_features(d, drop), InvalidArgument);
}

TEST(Dedup, NegativesOnly) {
  Dataset d({"a"}, {1, 1, 2, 2}, {0, 0, 1, 1});
  const Dataset r = dedup_majority(d);
  EXPECT_EQ(r.rows(), 3u);
  EXPECT_EQ(r.count(0), 1u);
  EXPECT_EQ(r.count(1), 2u);
}

TEST(Dedup, UniqueInputUnchangedAndIdempotent) {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const Dataset d = gen::dataset(rng, 30, 2, true);
    const Dataset once = dedup_majority(d);
    EXPECT_EQ(dedup_majority(once), once);
  }
  const Dataset u = gen::dataset(rng, 20, 3, false);
  EXPECT_EQ(dedup_majority(u), u);
}

TEST(CapNegatives, KeepsPositivesAndCount) {
  Rng rng(4);
  const Dataset d = gen::dataset(rng, 500, 2, false, 0.1);
  const Dataset c = cap_negatives(d, 100, 7);
  EXPECT_EQ(c.count(0), 100u);
  EXPECT_EQ(c.count(1), d.count(1));
  EXPECT_EQ(cap_negatives(d, 100, 7), c);
}

TEST(Split, StratifiedCounts) {
  std::vector<double> v(110);
  std::vector<Label> y(110, 0);
  for (std::size_t i = 0; i < 110; ++i) v[i] = static_cast<double>(i);
  for (std::size_t i = 100; i < 110; ++i) y[i] = 1;
  Dataset d({"x"}, v, y);
  const SplitPair s = stratified_split(d, 0.2, 7);
  EXPECT_EQ(s.test.count(0), 20u);
  EXPECT_EQ(s.test.count(1), 2u);
  const SplitPair s2 = stratified_split(d, 0.2, 7);
  EXPECT_EQ(s.train, s2.train);
  EXPECT_EQ(s.test, s2.test);
  EXPECT_EQ(s.test_rows, s2.test_rows);
}

TEST(Split, FullScaleRetainedSize) {
  std::vector<Label> y(200108, 0);
  std::fill(y.begin() + 200000, y.end(), 1);
  Dataset d({"x"}, std::vector<double>(200108, 0.0), y);
  const SplitPair s = stratified_split(d, 0.2, 1);
  EXPECT_NEAR(static_cast<double>(s.test.rows()), 40021.0, 1.0);
}

TEST(Split, MultisetUnionProperty) {
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    const Dataset d = gen::dataset(rng, 20 + uniform_index(rng, 80), 3, true);
    if (d.count(0) < 2 || d.count(1) < 2) continue;
    const SplitPair s = stratified_split(d, 0.3, t);
    EXPECT_EQ(row_multiset(s.train.concat(s.test)), row_multiset(d));
    std::vector<std::size_t> all = s.train_rows;
    all.insert(all.end(), s.test_rows.begin(), s.test_rows.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    EXPECT_GE(s.test.count(1), 1u);
    EXPECT_GE(s.train.count(1), 1u);
    EXPECT_GE(s.test.count(0), 1u);
  }
}

TEST(Split, SingletonClassRejected) {
  Dataset d({"x"}, {1, 2, 3}, {0, 0, 1});
  EXPECT_THROW(stratified_split(d, 0.5, 1), StratificationError);
}

TEST(Folds, BalancedPerClass) {
  Rng rng(12);
  const Dataset d = gen::dataset(rng, 103, 1, true, 0.2);
  const auto f = stratified_folds(d.labels(), 10, 3);
  for (Label c : {0, 1}) {
    std::map<std::size_t, std::size_t> per;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (d.label(i) == c) per[f[i]]++;
    const std::size_t n = d.count(c);
    for (std::size_t k = 0; k < 10; ++k) {
      EXPECT_GE(per[k], n / 10);
      EXPECT_LE(per[k], (n + 9) / 10);
    }
  }
}

TEST(Synthetic, Counts) {
  const Dataset d = gen_synthetic(2000, 20, 4.0, 1);
  EXPECT_EQ(d.rows(), 2020u);
  EXPECT_EQ(d.count(1), 20u);
  EXPECT_EQ(d.cols(), 6u);
  EXPECT_EQ(gen_synthetic(30, 5, 1.0, 2, SyntheticSchema::kPaper).cols(), 11u);
  EXPECT_EQ(gen_synthetic(2000, 20, 4.0, 1), d);
}

TEST(Synthetic, ZeroSeparationSharesMeans) {
  const Dataset d = gen_synthetic(4000, 4000, 0.0, 3);
  for (std::size_t j = 0; j < d.cols(); ++j) {
    double s0 = 0, s1 = 0;
    std::vector<double> l0, l1;
    for (std::size_t i = 0; i < d.rows(); ++i) (d.label(i) ? l1 : l0).push_back(std::log1p(d.at(i, j)));
    for (double v : l0) s0 += v;
    for (double v : l1) s1 += v;
    s0 /= l0.size();
    s1 /= l1.size();
    double var = 0;
    for (double v : l0) var += (v - s0) * (v - s0);
    const double sd = std::sqrt(var / l0.size());
    EXPECT_LT(std::abs(s0 - s1), 0.1 * sd + 1e-12) << d.column_names()[j];
  }
}

TEST(Synthetic, WellSeparatedIsLearnable) {
  const Dataset d = gen_synthetic(2000, 20, 6.0, 1);
  const SplitPair s = stratified_split(d, 0.5, 1);
  TreeParams p;
  p.max_depth = 3;
  const TreeModel m = fit_tree(s.train, p);
  std::vector<Label> pred;
  for (std::size_t i = 0; i < s.test.rows(); ++i) pred.push_back(hard_label(predict_proba_tree(m, s.test.row(i))));
  const auto r = rates(confusion(s.test.labels(), pred));
  EXPECT_GE(*r.tpr, 0.9);
}

TEST(Correlation, HandCases) {
  Dataset d({"x", "y", "z"}, {1, 5, 4, 2, 7, 3, 3, 9, 2, 4, 11, 1}, {0, 1, 0, 1});
  const auto c = pearson_correlation(d);
  EXPECT_NEAR(c[0], 1.0, 1e-15);
  EXPECT_NEAR(c[1], 1.0, 1e-12);
  EXPECT_NEAR(c[2], -1.0, 1e-12);
  Dataset k({"x", "k"}, {1, 2, 2, 2}, {0, 1});
  EXPECT_THROW(pearson_correlation(k), DegenerateInput);
}

TEST(Correlation, ScaleInvariantProperty) {
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = gen::dataset(rng, 30, 4, false);
    std::vector<double> v(d.values().begin(), d.values().end());
    const double scale = 0.1 + uniform_unit(rng) * 10;
    for (std::size_t i = 0; i < d.rows(); ++i) v[i * 4 + 2] *= scale;
    const Dataset s(d.column_names(), v, std::vector<Label>(d.labels().begin(), d.labels().end()));
    const auto a = pearson_correlation(d), b = pearson_correlation(s);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}
