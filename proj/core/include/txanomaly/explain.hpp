#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/dataset.hpp"

namespace txanomaly {

using ModelFn = std::function<double(std::span<const double>)>;

struct KernelShapParams {
  // Exhaustive enumeration whenever 2^D <= n_coalitions (and D <= 20);
  // otherwise this many coalitions are sampled.
  std::size_t n_coalitions = 4096;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct Attribution {
  double base_value = 0.0;  // mean model output over the background
  std::vector<double> phis;
  double fx = 0.0;
  bool exhaustive = true;
};

// Shapley kernel weight (D - 1) / (C(D, s) s (D - s)) for 0 < s < D.
double shapley_kernel_weight(std::size_t d, std::size_t s);

// KernelSHAP with the base value and efficiency imposed as constraints.
// Absent features take each background row's values in turn and the outputs
// are averaged. Throws InsufficientCoalitions when the regression is rank
// deficient.
Attribution kernel_shap(const ModelFn& f, std::span<const double> x, MatrixView background,
                        const KernelShapParams& params = {});

// Class-stratified background sample of at most n rows, in input order.
Dataset shap_background(const Dataset& train, std::size_t n, std::uint64_t seed);

struct FeatureImportance {
  std::string feature;
  double value;
};

// Mean |phi_j| across attributions, sorted descending (ties by column order).
std::vector<FeatureImportance> global_importance(std::span<const Attribution> attributions,
                                                 const std::vector<std::string>& feature_names);

// {base_value, fx, features: [{name, value, phi}]} with features ordered by
// |phi| descending.
nlohmann::json force_record(const Attribution& a, const std::vector<std::string>& feature_names,
                            std::span<const double> feature_values);

}  // namespace txanomaly
