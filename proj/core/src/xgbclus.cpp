#include "txanomaly/xgbclus.hpp"

#include <algorithm>

#include "txanomaly/error.hpp"
#include "txanomaly/parallel.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

nlohmann::json XgbclusTrace::to_json() const {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : iterations) {
    its.push_back({{"iteration", it.iteration},
                   {"tp", it.tp},
                   {"fp", it.fp},
                   {"accepted", it.accepted},
                   {"seed", it.seed}});
  }
  return {{"iterations", std::move(its)},
          {"tmax_final", tmax_final},
          {"fmin_final", fmin_final},
          {"positives", positives},
          {"selected_negatives", selected_negatives}};
}

namespace {

std::vector<std::size_t> merged_rows(const Dataset& train, std::span<const std::size_t> negatives) {
  std::vector<std::size_t> rows = train.indices_of(1);
  rows.insert(rows.end(), negatives.begin(), negatives.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

std::vector<std::size_t> xgbclus_draw(const Dataset& train, std::uint64_t iteration_seed) {
  const auto negatives = train.indices_of(0);
  const std::size_t p = train.count(1);
  Rng rng(iteration_seed);
  auto picks = sample_without_replacement(rng, negatives.size(), p);
  std::vector<std::size_t> out;
  out.reserve(p);
  for (std::size_t i : picks) out.push_back(negatives[i]);
  std::sort(out.begin(), out.end());
  return out;
}

ConfusionMatrix xgbclus_score(const Dataset& train, std::span<const std::size_t> negatives,
                              const Dataset& selector_eval, const XgbParams& learner) {
  const Dataset fit_set = train.subset(merged_rows(train, negatives));
  const auto model = fit_xgb(fit_set.features(), fit_set.labels(), learner, fit_set.column_names());
  std::vector<Label> pred(selector_eval.rows());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = hard_label(model.predict(selector_eval.row(i)));
  }
  return confusion(selector_eval.labels(), pred);
}

XgbclusResult xgbclus(const Dataset& train, const Dataset& selector_eval,
                      const XgbclusParams& params) {
  const std::size_t p = train.count(1);
  const std::size_t n_neg = train.count(0);
  if (p == 0) throw InvalidArgument("xgbclus needs at least one positive training row");
  if (n_neg < p) throw InvalidArgument("xgbclus needs at least as many negatives as positives");
  if (selector_eval.count(1) == 0 || selector_eval.count(0) == 0) {
    throw InvalidArgument("xgbclus selector set needs rows of both classes");
  }
  if (selector_eval.column_names() != train.column_names()) {
    throw SchemaError("xgbclus selector set has different columns from train");
  }
  const std::size_t k = n_neg / p;

  XgbclusTrace trace;
  trace.positives = p;
  trace.iterations.resize(k);
  for (std::size_t t = 0; t < k; ++t) {
    trace.iterations[t].iteration = t;
    trace.iterations[t].seed = derive_seed(params.seed, std::uint64_t{t});
  }

  std::vector<std::vector<std::size_t>> draws(k);
  parallel_for(k, params.threads, [&](std::size_t t) {
    auto& it = trace.iterations[t];
    draws[t] = xgbclus_draw(train, it.seed);
    const auto cm = xgbclus_score(train, draws[t], selector_eval, params.learner);
    it.tp = cm.tp;
    it.fp = cm.fp;
  });

  std::int64_t tmax = params.tmax0;
  std::int64_t fmin = params.fmin0;
  std::size_t chosen = k;
  for (std::size_t t = 0; t < k; ++t) {
    auto& it = trace.iterations[t];
    const auto tp = static_cast<std::int64_t>(it.tp);
    const auto fp = static_cast<std::int64_t>(it.fp);
    if (tp > tmax && fp < fmin) {
      it.accepted = true;
      tmax = tp;
      fmin = fp;
      chosen = t;
    }
  }
  trace.tmax_final = tmax;
  trace.fmin_final = fmin;
  if (chosen == k) {
    throw EmptySelectionError("xgbclus accepted no subset in " + std::to_string(k) +
                              " iterations; retry with lower TMAX or higher FMIN");
  }
  trace.selected_negatives = draws[chosen];
  XgbclusResult out;
  out.data = train.subset(merged_rows(train, trace.selected_negatives));
  out.trace = std::move(trace);
  return out;
}

}  // namespace txanomaly
