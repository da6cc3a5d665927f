#include <map>

#include <benchmark/benchmark.h>

#include "txanomaly/dataset.hpp"
#include "txanomaly/explain.hpp"
#include "txanomaly/knn.hpp"
#include "txanomaly/tree.hpp"
#include "txanomaly/xgbclus.hpp"

namespace {

using namespace txanomaly;

const Dataset& corpus(std::size_t n_major) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n_major);
  if (it == cache.end()) it = cache.emplace(n_major, gen_synthetic(n_major, n_major / 100 + 2, 3.0, 7)).first;
  return it->second;
}

void BM_KnnQuery(benchmark::State& state) {
  const auto& d = corpus(static_cast<std::size_t>(state.range(0)));
  const NeighborIndex index(d.features());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.query(d.row(i), 5, i));
    i = (i + 1) % d.rows();
  }
}
BENCHMARK(BM_KnnQuery)->Arg(2000)->Arg(20000);

void BM_KnnBuild(benchmark::State& state) {
  const auto& d = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    NeighborIndex index(d.features());
    benchmark::DoNotOptimize(index.size());
  }
}
BENCHMARK(BM_KnnBuild)->Arg(20000);

void BM_TreeFit(benchmark::State& state) {
  const auto& d = corpus(static_cast<std::size_t>(state.range(0)));
  TreeParams p;
  p.max_depth = 10;
  for (auto _ : state) benchmark::DoNotOptimize(fit_tree(d, p).nodes.size());
}
BENCHMARK(BM_TreeFit)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_KernelShapExhaustive(benchmark::State& state) {
  const auto& d = corpus(2000);
  TreeParams p;
  p.max_depth = 6;
  const auto tree = fit_tree(d, p);
  const Dataset bg = shap_background(d, static_cast<std::size_t>(state.range(0)), 3);
  const ModelFn f = [&](std::span<const double> x) { return tree.predict(x); };
  for (auto _ : state) benchmark::DoNotOptimize(kernel_shap(f, d.row(0), bg.features()).fx);
}
BENCHMARK(BM_KernelShapExhaustive)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Xgbclus(benchmark::State& state) {
  const auto& d = corpus(static_cast<std::size_t>(state.range(0)));
  const auto split = stratified_split(d, 0.2, 11);
  XgbclusParams p;
  p.seed = 5;
  p.learner.n_stages = 20;
  for (auto _ : state) benchmark::DoNotOptimize(xgbclus(split.train, split.test, p).data.rows());
}
BENCHMARK(BM_Xgbclus)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
