#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "oracles.hpp"
#include "txanomaly/dataset.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/metrics.hpp"
#include "txanomaly/tree.hpp"

using namespace txanomaly;

TEST(Confusion, Enumeration) {
  const std::vector<Label> y{1, 1, 0, 0}, p{1, 0, 1, 0};
  EXPECT_EQ(confusion(y, p), (ConfusionMatrix{1, 1, 1, 1}));
  EXPECT_EQ(confusion(y, y).fp, 0u);
  EXPECT_EQ(confusion(y, y).fn, 0u);
}

TEST(Confusion, RejectsBadInput) {
  const std::vector<Label> y{1, 0}, p{1};
  EXPECT_THROW(confusion(y, p), InvalidArgument);
  const std::vector<int> a{1, 2}, b{1, 0};
  EXPECT_THROW(confusion(a, b), InvalidArgument);
}

TEST(Rates, HandArithmetic) {
  const auto r = rates({19, 3, 28, 172});
  EXPECT_NEAR(*r.tpr, 19.0 / 22.0, 1e-15);
  EXPECT_NEAR(*r.tpr, 0.8636, 1e-4);
  EXPECT_DOUBLE_EQ(*r.fpr, 0.14);
  EXPECT_DOUBLE_EQ(*r.tnr, 0.86);
}

TEST(Rates, UndefinedAndPerfect) {
  const auto r = rates({0, 0, 2, 3});
  EXPECT_FALSE(r.tpr.has_value());
  EXPECT_EQ(format_rate(r.tpr), "undefined");
  EXPECT_EQ(rates_json(r)["tpr"], "undefined");
  const auto p = rates({4, 0, 0, 6});
  EXPECT_EQ(*p.accuracy, 1.0);
  EXPECT_EQ(*p.fpr, 0.0);
}

TEST(Rates, AllZeroPredictionsOnUnbalancedData) {
  const Dataset d = gen_synthetic(20000, 20, 3.0, 1);
  const std::vector<Label> zeros(d.rows(), 0);
  const auto cm = confusion(d.labels(), zeros);
  EXPECT_EQ(cm.tp, 0u);
  EXPECT_GE(*rates(cm).accuracy, 0.99);
}

TEST(Rates, SelfConfusionAccuracyOneProperty) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Dataset d = gen::dataset(rng, 1 + uniform_index(rng, 60), 1, true);
    EXPECT_EQ(*rates(confusion(d.labels(), d.labels())).accuracy, 1.0);
  }
}

TEST(Auc, HandCase) {
  const std::vector<Label> y{0, 0, 1, 1};
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  EXPECT_EQ(roc_auc(y, s).auc, 0.75);
}

TEST(Auc, PerfectSeparation) {
  const std::vector<Label> y{0, 1, 0, 1};
  const std::vector<double> s{0.1, 0.9, 0.2, 0.8};
  EXPECT_EQ(roc_auc(y, s).auc, 1.0);
}

TEST(Auc, SingleClassOrNonFiniteRejected) {
  const std::vector<Label> y{1, 1};
  const std::vector<double> s{0.1, 0.2};
  EXPECT_THROW(roc_auc(y, s), InvalidArgument);
  const std::vector<Label> y2{0, 1};
  const std::vector<double> s2{0.1, NAN};
  EXPECT_THROW(roc_auc(y2, s2), InvalidArgument);
}

TEST(Auc, MatchesMannWhitney) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 150);
    std::vector<Label> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = uniform_unit(rng) < 0.4;
      s[i] = t % 2 ? static_cast<double>(uniform_index(rng, 5)) / 4.0 : uniform_unit(rng);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(roc_auc(y, s).auc, oracle::mann_whitney_auc(y, s), 1e-9);
  }
}

TEST(Auc, ComplementAndMonotoneInvarianceProperty) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 80);
    std::vector<Label> y(n);
    std::vector<double> s(n), neg(n), warped(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = uniform_unit(rng) < 0.5;
      s[i] = uniform_unit(rng);
      neg[i] = -s[i];
      warped[i] = std::exp(3 * s[i]) + 7;
    }
    y[0] = 0;
    y[1] = 1;
    const double a = roc_auc(y, s).auc;
    EXPECT_NEAR(a + roc_auc(y, neg).auc, 1.0, 1e-12);
    EXPECT_EQ(roc_auc(y, warped).auc, a);
  }
}

TEST(Roc, EndpointsAndThresholds) {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 40);
    std::vector<Label> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = uniform_unit(rng) < 0.5;
      s[i] = static_cast<double>(uniform_index(rng, 6));
    }
    y[0] = 0;
    y[1] = 1;
    const auto c = roc_auc(y, s).curve;
    EXPECT_EQ(c.fpr.front(), 0.0);
    EXPECT_EQ(c.tpr.front(), 0.0);
    EXPECT_EQ(c.fpr.back(), 1.0);
    EXPECT_EQ(c.tpr.back(), 1.0);
    EXPECT_EQ(c.thresholds.front(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 1; i < c.fpr.size(); ++i) {
      EXPECT_LE(c.fpr[i - 1], c.fpr[i]);
      EXPECT_LE(c.tpr[i - 1], c.tpr[i]);
      EXPECT_GT(c.thresholds[i - 1], c.thresholds[i]);
    }
  }
}

TEST(Roc, CsvLayout) {
  const std::vector<Label> y{0, 1};
  const std::vector<double> s{0.2, 0.7};
  std::ostringstream out;
  write_roc_csv(roc_auc(y, s).curve, out);
  EXPECT_EQ(out.str().substr(0, 14), "threshold,fpr,");
}

TEST(HardLabels, StrictThreshold) {
  const std::vector<double> p{0.5, 0.5000001, 0.0, 1.0};
  EXPECT_EQ(hard_labels(p), (std::vector<Label>{0, 1, 0, 1}));
}
