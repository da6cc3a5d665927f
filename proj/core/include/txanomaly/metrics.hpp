#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "txanomaly/dataset.hpp"

namespace txanomaly {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws InvalidArgument on length mismatch or a label outside {0, 1}.
ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred);
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

// nullopt marks a rate whose denominator is zero.
struct Rates {
  std::optional<double> accuracy;
  std::optional<double> tpr;
  std::optional<double> tnr;
  std::optional<double> fpr;
};
Rates rates(const ConfusionMatrix& cm);

struct RocCurve {
  // From (0, 0) to (1, 1). thresholds[i] is the smallest score predicted
  // positive at point i; the first entry is +inf.
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

// Equal scores form one threshold step, which gives tied pairs half credit.
// Throws InvalidArgument when only one class is present or a score is not finite.
RocResult roc_auc(std::span<const Label> y_true, std::span<const double> scores);

std::vector<Label> hard_labels(std::span<const double> probabilities);

nlohmann::json rates_json(const Rates& r);
nlohmann::json confusion_json(const ConfusionMatrix& cm);
void write_roc_csv(const RocCurve& roc, std::ostream& out);

// Rates render as numbers or the string "undefined".
std::string format_rate(const std::optional<double>& rate);

}  // namespace txanomaly
