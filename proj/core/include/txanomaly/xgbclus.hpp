#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/boosting.hpp"
#include "txanomaly/dataset.hpp"
#include "txanomaly/metrics.hpp"

namespace txanomaly {

struct XgbclusParams {
  XgbParams learner;
  // Initial TMAX / FMIN. The defaults accept the first iteration.
  std::int64_t tmax0 = -1;
  std::int64_t fmin0 = std::numeric_limits<std::int64_t>::max();
  std::uint64_t seed = 0;
  // Candidate fits may run concurrently; acceptance is still decided in
  // iteration order, so the result does not depend on this.
  unsigned threads = 1;
};

struct XgbclusIteration {
  std::size_t iteration = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  bool accepted = false;
  std::uint64_t seed = 0;  // seed of this iteration's negative draw
};

struct XgbclusTrace {
  std::vector<XgbclusIteration> iterations;
  std::int64_t tmax_final = -1;
  std::int64_t fmin_final = 0;
  std::size_t positives = 0;
  // Train row indices of the last accepted negative subset, ascending.
  std::vector<std::size_t> selected_negatives;

  nlohmann::json to_json() const;
};

struct XgbclusResult {
  Dataset data;  // every positive plus the accepted negatives, in train order
  XgbclusTrace trace;
};

// Iterative under-sampler: k = floor(negatives / P) rounds, each drawing P
// negatives without replacement, fitting the second-order booster on them plus
// all positives, and keeping the draw if it beats both TP > TMAX and FP < FMIN
// on `selector_eval`. Throws EmptySelectionError when nothing is accepted.
XgbclusResult xgbclus(const Dataset& train, const Dataset& selector_eval,
                      const XgbclusParams& params);

// The P negatives drawn in one iteration, as ascending train row indices.
std::vector<std::size_t> xgbclus_draw(const Dataset& train, std::uint64_t iteration_seed);

// Fits the booster on the positives plus `negatives` (train row indices) and
// scores `selector_eval`. Used by xgbclus and to replay a trace.
ConfusionMatrix xgbclus_score(const Dataset& train, std::span<const std::size_t> negatives,
                              const Dataset& selector_eval, const XgbParams& learner);

}  // namespace txanomaly
