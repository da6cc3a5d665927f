#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/dataset.hpp"
#include "txanomaly/knn.hpp"

namespace txanomaly {

// The smaller class; ties go to the positive class.
Label minority_label(const Dataset& d);

enum class BalanceMode { kUnder, kOver };

struct BalanceReport {
  std::string method;
  BalanceMode mode = BalanceMode::kUnder;
  // Under-sampling: n_minority / n_majority_after. Over-sampling: its inverse.
  double ratio = 0.0;
  std::size_t n_minority = 0;
  std::size_t n_majority_after = 0;
  std::size_t n_synthetic = 0;
  std::size_t n_removed = 0;
  bool uniform_fallback = false;

  nlohmann::json to_json() const;
};

BalanceReport balance_report(std::string method, BalanceMode mode, const Dataset& output);

// All minority rows plus an equal-size uniform subset of the majority. Rows
// keep their input order.
Dataset random_undersample(const Dataset& train, std::uint64_t seed);

// Keeps each minority row's nearest majority row; if that marks fewer rows
// than the minority count, the unmarked majority rows closest to any minority
// row fill the gap.
Dataset near_miss_1(const Dataset& train, Metric metric = Metric::kEuclidean);

struct SyntheticOrigin {
  std::size_t parent;    // input row index of X_i
  std::size_t neighbor;  // input row index of X_zi
  double lambda;
};

struct OversampleResult {
  Dataset data;  // input rows followed by synthetics
  std::vector<SyntheticOrigin> origins;
  // Per minority row (in input order): number of synthetics generated from it.
  std::vector<std::size_t> allocation;
  bool uniform_fallback = false;
};

// X_i + lambda (X_z - X_i), clamped coordinate-wise to the segment.
std::vector<double> smote_point(std::span<const double> x_i, std::span<const double> x_z,
                                double lambda);

OversampleResult smote_detailed(const Dataset& train, std::size_t k, std::uint64_t seed,
                                Metric metric = Metric::kEuclidean);
Dataset smote(const Dataset& train, std::size_t k, std::uint64_t seed,
              Metric metric = Metric::kEuclidean);

// Largest-remainder apportionment of `total` proportional to `weights`; ties
// in the remainder go to the lower index. All-zero weights allocate uniformly.
std::vector<std::size_t> adasyn_allocation(std::span<const double> weights, std::size_t total);

OversampleResult adasyn_detailed(const Dataset& train, std::size_t k, std::uint64_t seed,
                                 Metric metric = Metric::kEuclidean);
Dataset adasyn(const Dataset& train, std::size_t k, std::uint64_t seed,
               Metric metric = Metric::kEuclidean);

// Row indices ENN would remove: rows whose k nearest neighbours (self
// excluded) hold a strict majority of the other label.
std::vector<std::size_t> enn_removals(const Dataset& d, std::size_t k,
                                      Metric metric = Metric::kEuclidean);
Dataset enn_clean(const Dataset& d, std::size_t k = 3, Metric metric = Metric::kEuclidean);

// Cross-label mutual nearest-neighbour pairs (a < b).
std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Dataset& d,
                                                             Metric metric = Metric::kEuclidean);
// Drops the majority-class member of every link.
Dataset tomek_remove(const Dataset& d, Metric metric = Metric::kEuclidean);

Dataset smote_enn(const Dataset& train, std::size_t k_smote, std::size_t k_enn, std::uint64_t seed);
Dataset smote_tomek(const Dataset& train, std::size_t k_smote, std::uint64_t seed);

}  // namespace txanomaly
