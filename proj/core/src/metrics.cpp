#include "txanomaly/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "txanomaly/error.hpp"
#include "txanomaly/tree.hpp"

namespace txanomaly {

namespace {

template <typename T>
ConfusionMatrix count(std::span<const T> y_true, std::span<const T> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgument("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                          std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto t = y_true[i];
    const auto p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw InvalidArgument("confusion: non-binary value at position " + std::to_string(i));
    }
    if (t == 1) {
      (p == 1 ? cm.tp : cm.fn)++;
    } else {
      (p == 1 ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  return count(y_true, y_pred);
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  return count(y_true, y_pred);
}

Rates rates(const ConfusionMatrix& cm) {
  return {ratio(cm.tp + cm.tn, cm.total()), ratio(cm.tp, cm.tp + cm.fn), ratio(cm.tn, cm.tn + cm.fp),
          ratio(cm.fp, cm.fp + cm.tn)};
}

RocResult roc_auc(std::span<const Label> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw InvalidArgument("roc_auc: length mismatch");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] > 1) throw InvalidArgument("roc_auc: non-binary label");
    if (!std::isfinite(scores[i])) throw InvalidArgument("roc_auc: scores must be finite");
    pos += y_true[i];
  }
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) throw InvalidArgument("roc_auc needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult r;
  r.curve.fpr.push_back(0.0);
  r.curve.tpr.push_back(0.0);
  r.curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  // Twice the area in units of one (positive, negative) pair.
  unsigned long long area2 = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    const std::size_t tp0 = tp;
    const std::size_t fp0 = fp;
    for (; k < order.size() && scores[order[k]] == s; ++k) (y_true[order[k]] ? tp : fp)++;
    area2 += static_cast<unsigned long long>(fp - fp0) * (tp + tp0);
    r.curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    r.curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    r.curve.thresholds.push_back(s);
  }
  r.auc = static_cast<double>(static_cast<long double>(area2) /
                              (2.0L * static_cast<long double>(pos) * static_cast<long double>(neg)));
  return r;
}

std::vector<Label> hard_labels(std::span<const double> probabilities) {
  std::vector<Label> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = hard_label(probabilities[i]);
  return out;
}

nlohmann::json rates_json(const Rates& r) {
  auto v = [](const std::optional<double>& x) -> nlohmann::json {
    if (x) return *x;
    return "undefined";
  };
  return {{"accuracy", v(r.accuracy)}, {"tpr", v(r.tpr)}, {"tnr", v(r.tnr)}, {"fpr", v(r.fpr)}};
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
}

std::string format_rate(const std::optional<double>& rate) {
  return rate ? fmt::format("{}", *rate) : std::string("undefined");
}

void write_roc_csv(const RocCurve& roc, std::ostream& out) {
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
    out << fmt::format("{},{},{}\n", roc.thresholds[i], roc.fpr[i], roc.tpr[i]);
  }
}

}  // namespace txanomaly
