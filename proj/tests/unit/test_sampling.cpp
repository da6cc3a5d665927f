#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "oracles.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/sampling.hpp"

using namespace txanomaly;

namespace {

using Row = std::vector<double>;

std::multiset<Row> class_rows(const Dataset& d, Label c) {
  std::multiset<Row> out;
  for (std::size_t i = 0; i < d.rows(); ++i)
    if (d.label(i) == c) out.emplace(d.row(i).begin(), d.row(i).end());
  return out;
}

bool includes(const std::multiset<Row>& big, const std::multiset<Row>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

Dataset imbalanced(Rng& rng, std::size_t neg, std::size_t pos, std::size_t d, bool grid = false) {
  std::vector<double> v;
  std::vector<Label> y;
  for (std::size_t i = 0; i < neg + pos; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      v.push_back(grid ? static_cast<double>(uniform_index(rng, 5)) : uniform_unit(rng) * 4);
    }
    y.push_back(i >= neg);
  }
  // Interleave so minority rows are not all at the end.
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_indices(rng, order);
  return Dataset(gen::names(d), std::move(v), std::move(y)).subset(order);
}

}  // namespace

TEST(MinorityLabel, TiesGoPositive) {
  EXPECT_EQ(minority_label(Dataset({"a"}, {1, 2}, {0, 1})), 1);
  EXPECT_EQ(minority_label(Dataset({"a"}, {1, 2, 3}, {1, 1, 0})), 0);
}

TEST(Rus, CountsAndSubset) {
  Rng rng(1);
  const Dataset d = imbalanced(rng, 1000, 10, 2);
  const Dataset r = random_undersample(d, 5);
  EXPECT_EQ(r.rows(), 20u);
  EXPECT_EQ(r.count(0), 10u);
  EXPECT_EQ(r.count(1), 10u);
  EXPECT_EQ(random_undersample(d, 5), r);
  EXPECT_TRUE(includes(class_rows(d, 0), class_rows(r, 0)));
  EXPECT_EQ(class_rows(r, 1), class_rows(d, 1));
}

TEST(NearMiss, KeepsClosestMajority) {
  Dataset d({"x", "y"}, {0, 0, 1, 0, 2, 0, 3, 0}, {1, 0, 0, 0});
  const Dataset r = near_miss_1(d);
  EXPECT_EQ(r.rows(), 2u);
  EXPECT_EQ(r.at(1, 0), 1.0);
}

TEST(NearMiss, SharedNeighbourFilled) {
  // Both minority rows share nearest majority (0,0); the fill adds (5,0).
  Dataset d({"x", "y"}, {-1, 0, -1, 0.5, 0, 0, 5, 0, 9, 0}, {1, 1, 0, 0, 0});
  const Dataset r = near_miss_1(d);
  EXPECT_EQ(r.count(0), 2u);
  EXPECT_EQ(r.count(1), 2u);
  std::set<double> xs;
  for (std::size_t i = 0; i < r.rows(); ++i)
    if (r.label(i) == 0) xs.insert(r.at(i, 0));
  EXPECT_EQ(xs, (std::set<double>{0, 5}));
}

TEST(Smote, PointFormula) {
  const std::vector<double> a{0, 0}, b{2, 2};
  EXPECT_EQ(smote_point(a, b, 0.5), (std::vector<double>{1, 1}));
  EXPECT_EQ(smote_point(a, b, 0.0), a);
  EXPECT_EQ(smote_point(a, b, 1.0), b);
}

TEST(Smote, BetweennessOfThousandRows) {
  Rng rng(2);
  const Dataset d = imbalanced(rng, 1030, 30, 4);
  const auto r = smote_detailed(d, 5, 9);
  ASSERT_EQ(r.origins.size(), 1000u);
  for (std::size_t s = 0; s < r.origins.size(); ++s) {
    const auto syn = r.data.row(d.rows() + s);
    const auto a = d.row(r.origins[s].parent), b = d.row(r.origins[s].neighbor);
    EXPECT_EQ(d.label(r.origins[s].parent), 1);
    EXPECT_EQ(d.label(r.origins[s].neighbor), 1);
    for (std::size_t j = 0; j < syn.size(); ++j) {
      EXPECT_GE(syn[j], std::min(a[j], b[j]));
      EXPECT_LE(syn[j], std::max(a[j], b[j]));
    }
  }
  EXPECT_EQ(r.data.count(0), r.data.count(1));
}

TEST(Smote, NeighbourIsAmongKNearestMinority) {
  Rng rng(3);
  const Dataset d = imbalanced(rng, 200, 12, 3);
  const auto r = smote_detailed(d, 3, 4);
  const auto minority = d.indices_of(1);
  const Dataset m = d.subset(minority);
  for (const auto& o : r.origins) {
    const std::size_t a = std::find(minority.begin(), minority.end(), o.parent) - minority.begin();
    auto nn = oracle::knn(m.features(), m.row(a), 3, false, a);
    for (auto& i : nn) i = minority[i];
    EXPECT_NE(std::find(nn.begin(), nn.end(), o.neighbor), nn.end());
  }
}

TEST(Smote, BalancedInputUnchanged) {
  Rng rng(4);
  const Dataset d = imbalanced(rng, 10, 10, 2);
  EXPECT_EQ(smote(d, 3, 1), d);
  EXPECT_THROW(smote(d, 10, 1), InvalidArgument);
}

TEST(Adasyn, AllocationHandCase) {
  const std::vector<double> r{0.75, 0.25};
  EXPECT_EQ(adasyn_allocation(r, 8), (std::vector<std::size_t>{6, 2}));
  const std::vector<double> tie{1, 1, 1};
  EXPECT_EQ(adasyn_allocation(tie, 4), (std::vector<std::size_t>{2, 1, 1}));
  const std::vector<double> zero{0, 0};
  EXPECT_EQ(adasyn_allocation(zero, 5), (std::vector<std::size_t>{3, 2}));
}

TEST(Adasyn, AllocationSumsToTotalProperty) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> w(1 + uniform_index(rng, 40));
    for (auto& x : w) x = uniform_index(rng, 3) == 0 ? 0.0 : uniform_unit(rng);
    const std::size_t total = uniform_index(rng, 5000);
    const auto g = adasyn_allocation(w, total);
    std::size_t s = 0;
    for (auto x : g) s += x;
    EXPECT_EQ(s, total);
  }
}

TEST(Adasyn, WeightsMatchBruteForceNeighbourCounts) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = imbalanced(rng, 60 + uniform_index(rng, 60), 5 + uniform_index(rng, 10), 2);
    const std::size_t k = 5;
    const auto res = adasyn_detailed(d, k, t);
    std::vector<double> r;
    for (std::size_t i : d.indices_of(1)) {
      std::size_t maj = 0;
      for (std::size_t j : oracle::knn(d.features(), d.row(i), k, false, i)) maj += d.label(j) == 0;
      r.push_back(static_cast<double>(maj) / k);
    }
    const std::size_t g = d.count(0) - d.count(1);
    EXPECT_EQ(res.allocation, adasyn_allocation(r, g));
    EXPECT_EQ(res.origins.size(), g);
    EXPECT_EQ(res.data.count(1), res.data.count(0));
  }
}

TEST(Adasyn, UniformFallbackReported) {
  // Minority cluster far from all majority rows: every r_i is 0.
  Dataset d({"x"}, {0, 0.1, 0.2, 100, 101, 102, 103, 104}, {1, 1, 1, 0, 0, 0, 0, 0});
  const auto r = adasyn_detailed(d, 2, 1);
  EXPECT_TRUE(r.uniform_fallback);
  EXPECT_EQ(r.allocation, (std::vector<std::size_t>{1, 1, 0}));
}

TEST(Enn, LoneNegativeRemoved) {
  Dataset d({"x", "y"}, {0, 0, 1, 0, -1, 0, 0, 1}, {0, 1, 1, 1});
  EXPECT_EQ(enn_removals(d, 3), std::vector<std::size_t>{0});
  EXPECT_EQ(enn_clean(d, 3).rows(), 3u);
}

TEST(Enn, SeparatedClustersUntouched) {
  Rng rng(7);
  const Dataset d = gen::blobs(rng, 40, 20, 2, 50.0);
  EXPECT_TRUE(enn_removals(d, 3).empty());
  EXPECT_EQ(enn_clean(d, 3), d);
}

TEST(Enn, MatchesBruteForce) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 5 + uniform_index(rng, 196);
    const Dataset d = gen::dataset(rng, n, 1 + uniform_index(rng, 3), t % 2 == 0, 0.4);
    const std::size_t k = 1 + uniform_index(rng, 4);
    ASSERT_EQ(enn_removals(d, k), oracle::enn_removals(d, k)) << "case " << t;
    EXPECT_TRUE(includes(class_rows(d, 0), class_rows(enn_clean(d, k), 0)));
  }
}

TEST(Tomek, HandCase) {
  Dataset d({"x", "y"}, {0, 0, 0.1, 0, 5, 5}, {0, 1, 0});
  using Link = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(tomek_links(d), (std::vector<Link>{{0, 1}}));
  const Dataset r = tomek_remove(d);
  EXPECT_EQ(r.rows(), 2u);
  EXPECT_EQ(r.at(0, 0), 0.1);
}

TEST(Tomek, SingleClassHasNoLinks) {
  Dataset d({"x"}, {0, 1, 2}, {0, 0, 0});
  EXPECT_TRUE(tomek_links(d).empty());
  EXPECT_EQ(tomek_remove(d), d);
}

TEST(Tomek, MatchesBruteForceAndOrderInvariant) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 199);
    const Dataset d = gen::dataset(rng, n, 1 + uniform_index(rng, 3), false, 0.4);
    const auto links = tomek_links(d);
    ASSERT_EQ(links, oracle::tomek_links(d)) << "case " << t;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle_indices(rng, perm);
    using LinkSet = std::set<std::pair<std::size_t, std::size_t>>;
    LinkSet mapped;
    for (auto [a, b] : tomek_links(d.subset(perm)))
      mapped.insert(std::minmax(perm[a], perm[b]));
    EXPECT_EQ(mapped, LinkSet(links.begin(), links.end()));
  }
}

TEST(Compositions, DefinitionsAndMonotonicity) {
  Rng rng(10);
  const Dataset d = imbalanced(rng, 150, 15, 2);
  const Dataset s = smote(d, 5, 3);
  EXPECT_EQ(smote_enn(d, 5, 3, 3), enn_clean(s, 3));
  EXPECT_EQ(smote_tomek(d, 5, 3), tomek_remove(s));
  EXPECT_LE(smote_enn(d, 5, 3, 3).rows(), s.rows());
}

TEST(Compositions, SeparatedSmoteTomekIsSmote) {
  Rng rng(11);
  const Dataset d = gen::blobs(rng, 60, 10, 2, 40.0);
  EXPECT_EQ(smote_tomek(d, 3, 1), smote(d, 3, 1));
}

TEST(SamplerInvariants, MinorityPreservedAndBalanced) {
  Rng rng(12);
  for (int t = 0; t < 15; ++t) {
    const Dataset d = imbalanced(rng, 80 + uniform_index(rng, 100), 6 + uniform_index(rng, 10), 3,
                                 t % 3 == 0);
    const auto minority = class_rows(d, 1);
    const Dataset outs[] = {random_undersample(d, t), near_miss_1(d), smote(d, 3, t),
                            adasyn(d, 3, t), smote_tomek(d, 3, t)};
    for (const auto& o : outs) EXPECT_TRUE(includes(class_rows(o, 1), minority));
    for (int i = 0; i < 4; ++i) EXPECT_EQ(outs[i].count(0), outs[i].count(1));
    EXPECT_EQ(random_undersample(d, t), outs[0]);
    EXPECT_EQ(smote(d, 3, t), outs[2]);
    EXPECT_EQ(adasyn(d, 3, t), outs[3]);
  }
}

TEST(BalanceReport, Ratios) {
  Dataset d({"x"}, {1, 2, 3, 4, 5}, {0, 0, 0, 1, 1});
  const auto r = balance_report("rus", BalanceMode::kUnder, d);
  EXPECT_EQ(r.n_minority, 2u);
  EXPECT_EQ(r.n_majority_after, 3u);
  EXPECT_NEAR(r.ratio, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(r.to_json()["method"], "rus");
}
