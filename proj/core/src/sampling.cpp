#include "txanomaly/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "txanomaly/error.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

Label minority_label(const Dataset& d) {
  return d.count(1) <= d.count(0) ? Label{1} : Label{0};
}

nlohmann::json BalanceReport::to_json() const {
  return {{"method", method},
          {"mode", mode == BalanceMode::kUnder ? "under" : "over"},
          {"ratio", ratio},
          {"n_minority", n_minority},
          {"n_majority_after", n_majority_after},
          {"n_synthetic", n_synthetic},
          {"n_removed", n_removed},
          {"uniform_fallback", uniform_fallback}};
}

BalanceReport balance_report(std::string method, BalanceMode mode, const Dataset& output) {
  BalanceReport r;
  r.method = std::move(method);
  r.mode = mode;
  const Label minor = minority_label(output);
  r.n_minority = output.count(minor);
  r.n_majority_after = output.rows() - r.n_minority;
  const double a = static_cast<double>(r.n_minority);
  const double b = static_cast<double>(r.n_majority_after);
  if (mode == BalanceMode::kUnder) {
    r.ratio = b > 0 ? a / b : 0.0;
  } else {
    r.ratio = a > 0 ? b / a : 0.0;
  }
  return r;
}

namespace {

struct ClassRows {
  Label minor;
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
};

ClassRows split_classes(const Dataset& d) {
  ClassRows c;
  c.minor = minority_label(d);
  c.minority = d.indices_of(c.minor);
  c.majority = d.indices_of(static_cast<Label>(1 - c.minor));
  return c;
}

// Copies the listed rows into a contiguous matrix for indexing.
std::vector<double> gather(const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * d.cols());
  for (std::size_t i : rows) {
    const auto r = d.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

Dataset keep_marked(const Dataset& d, const std::vector<bool>& keep) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (keep[i]) rows.push_back(i);
  }
  return d.subset(rows);
}

}  // namespace

Dataset random_undersample(const Dataset& train, std::uint64_t seed) {
  const auto c = split_classes(train);
  if (c.minority.empty()) throw InvalidArgument("random_undersample needs at least one minority row");
  Rng rng(seed);
  const auto picks = sample_without_replacement(rng, c.majority.size(), c.minority.size());
  std::vector<bool> keep(train.rows(), false);
  for (std::size_t i : c.minority) keep[i] = true;
  for (std::size_t p : picks) keep[c.majority[p]] = true;
  return keep_marked(train, keep);
}

Dataset near_miss_1(const Dataset& train, Metric metric) {
  const auto c = split_classes(train);
  if (c.minority.empty() || c.majority.empty()) {
    throw InvalidArgument("near_miss_1 needs rows of both classes");
  }
  const auto major_values = gather(train, c.majority);
  const NeighborIndex major_index(MatrixView(major_values, c.majority.size(), train.cols()), metric);

  std::vector<bool> keep(train.rows(), false);
  for (std::size_t i : c.minority) keep[i] = true;
  std::size_t marked = 0;
  for (std::size_t i : c.minority) {
    const std::size_t j = c.majority[major_index.query_indices(train.row(i), 1).front()];
    if (!keep[j]) {
      keep[j] = true;
      ++marked;
    }
  }

  if (marked < c.minority.size()) {
    const auto minor_values = gather(train, c.minority);
    const NeighborIndex minor_index(MatrixView(minor_values, c.minority.size(), train.cols()),
                                    metric);
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t j : c.majority) {
      if (!keep[j]) candidates.emplace_back(minor_index.query(train.row(j), 1).front().distance, j);
    }
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t t = 0; t < candidates.size() && marked < c.minority.size(); ++t, ++marked) {
      keep[candidates[t].second] = true;
    }
  }
  return keep_marked(train, keep);
}

namespace {

// Synthetic point X_i + lambda (X_z - X_i), clamped to the segment's bounding
// box since rounding can otherwise step just outside it.
void interpolate(std::span<const double> a, std::span<const double> b, double lambda,
                 std::vector<double>& out) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double v = a[j] + lambda * (b[j] - a[j]);
    out.push_back(std::clamp(v, std::min(a[j], b[j]), std::max(a[j], b[j])));
  }
}

OversampleResult finish(const Dataset& train, Label minor, std::vector<double> values,
                        std::vector<SyntheticOrigin> origins, std::vector<std::size_t> allocation,
                        bool fallback) {
  OversampleResult r;
  std::vector<Label> labels(origins.size(), minor);
  Dataset synth(train.column_names(), std::move(values), std::move(labels), train.label_name());
  r.data = train.concat(synth);
  r.origins = std::move(origins);
  r.allocation = std::move(allocation);
  r.uniform_fallback = fallback;
  return r;
}

// k nearest minority neighbours (self excluded) of every minority row, as
// input row indices.
std::vector<std::vector<std::size_t>> minority_neighbors(const Dataset& d,
                                                         const std::vector<std::size_t>& minority,
                                                         std::size_t k, Metric metric) {
  const auto values = gather(d, minority);
  const NeighborIndex index(MatrixView(values, minority.size(), d.cols()), metric);
  std::vector<std::vector<std::size_t>> out(minority.size());
  for (std::size_t a = 0; a < minority.size(); ++a) {
    for (std::size_t b : index.query_indices(d.row(minority[a]), k, a)) {
      out[a].push_back(minority[b]);
    }
  }
  return out;
}

}  // namespace

std::vector<double> smote_point(std::span<const double> x_i, std::span<const double> x_z,
                                double lambda) {
  if (x_i.size() != x_z.size()) throw InvalidArgument("smote_point: dimension mismatch");
  std::vector<double> out;
  out.reserve(x_i.size());
  interpolate(x_i, x_z, lambda, out);
  return out;
}

OversampleResult smote_detailed(const Dataset& train, std::size_t k, std::uint64_t seed,
                                Metric metric) {
  const auto c = split_classes(train);
  const std::size_t m = c.minority.size();
  if (m < 2) throw InvalidArgument("smote needs at least 2 minority rows");
  if (k < 1 || k > m - 1) {
    throw InvalidArgument("smote k=" + std::to_string(k) + " must lie in [1, " +
                          std::to_string(m - 1) + "]");
  }
  const std::size_t g_total = c.majority.size() - m;
  std::vector<std::size_t> allocation(m, 0);
  std::vector<SyntheticOrigin> origins;
  std::vector<double> values;
  if (g_total > 0) {
    const auto neighbors = minority_neighbors(train, c.minority, k, metric);
    Rng rng(seed);
    origins.reserve(g_total);
    values.reserve(g_total * train.cols());
    for (std::size_t g = 0; g < g_total; ++g) {
      const std::size_t a = g % m;
      const std::size_t z = neighbors[a][uniform_index(rng, k)];
      const double lambda = uniform_unit(rng);
      interpolate(train.row(c.minority[a]), train.row(z), lambda, values);
      origins.push_back({c.minority[a], z, lambda});
      ++allocation[a];
    }
  }
  return finish(train, c.minor, std::move(values), std::move(origins), std::move(allocation), false);
}

Dataset smote(const Dataset& train, std::size_t k, std::uint64_t seed, Metric metric) {
  return smote_detailed(train, k, seed, metric).data;
}

std::vector<std::size_t> adasyn_allocation(std::span<const double> weights, std::size_t total) {
  const std::size_t m = weights.size();
  if (m == 0) throw InvalidArgument("adasyn_allocation needs at least one weight");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("allocation weights must be >= 0");
    sum += w;
  }
  std::vector<std::size_t> g(m, 0);
  std::vector<double> frac(m, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double share = sum > 0.0 ? weights[i] / sum : 1.0 / static_cast<double>(m);
    const double exact = share * static_cast<double>(total);
    g[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - static_cast<double>(g[i]);
    assigned += g[i];
  }
  // Floating error can push the floors past the total; trim from the smallest
  // remainders first.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t t = 0; assigned < total; t = (t + 1) % m) {
    ++g[order[t]];
    ++assigned;
  }
  for (std::size_t t = m - 1; assigned > total; t = t == 0 ? m - 1 : t - 1) {
    if (g[order[t]] > 0) {
      --g[order[t]];
      --assigned;
    }
  }
  return g;
}

OversampleResult adasyn_detailed(const Dataset& train, std::size_t k, std::uint64_t seed,
                                 Metric metric) {
  const auto c = split_classes(train);
  const std::size_t m = c.minority.size();
  if (m < 2) throw InvalidArgument("adasyn needs at least 2 minority rows");
  if (k < 1 || k > train.rows() - 1) throw InvalidArgument("adasyn k out of range");
  const std::size_t g_total = c.majority.size() - m;

  const NeighborIndex full(train.features(), metric);
  std::vector<double> r(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    std::size_t majority = 0;
    for (std::size_t j : full.query_indices(train.row(c.minority[a]), k, c.minority[a])) {
      majority += train.label(j) != c.minor;
    }
    r[a] = static_cast<double>(majority) / static_cast<double>(k);
  }
  const bool fallback = std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; });
  auto allocation = adasyn_allocation(r, g_total);

  std::vector<SyntheticOrigin> origins;
  std::vector<double> values;
  if (g_total > 0) {
    const std::size_t kk = std::min(k, m - 1);
    const auto neighbors = minority_neighbors(train, c.minority, kk, metric);
    Rng rng(seed);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t s = 0; s < allocation[a]; ++s) {
        const std::size_t z = neighbors[a][uniform_index(rng, kk)];
        const double lambda = uniform_unit(rng);
        interpolate(train.row(c.minority[a]), train.row(z), lambda, values);
        origins.push_back({c.minority[a], z, lambda});
      }
    }
  }
  return finish(train, c.minor, std::move(values), std::move(origins), std::move(allocation),
                fallback);
}

Dataset adasyn(const Dataset& train, std::size_t k, std::uint64_t seed, Metric metric) {
  return adasyn_detailed(train, k, seed, metric).data;
}

std::vector<std::size_t> enn_removals(const Dataset& d, std::size_t k, Metric metric) {
  if (k < 1 || d.rows() <= k) {
    throw InvalidArgument("enn needs 1 <= k < N (k=" + std::to_string(k) + ", N=" +
                          std::to_string(d.rows()) + ")");
  }
  const NeighborIndex index(d.features(), metric);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::size_t other = 0;
    for (std::size_t j : index.query_indices(d.row(i), k, i)) other += d.label(j) != d.label(i);
    if (2 * other > k) out.push_back(i);
  }
  return out;
}

Dataset enn_clean(const Dataset& d, std::size_t k, Metric metric) {
  std::vector<bool> keep(d.rows(), true);
  for (std::size_t i : enn_removals(d, k, metric)) keep[i] = false;
  return keep_marked(d, keep);
}

std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Dataset& d, Metric metric) {
  std::vector<std::pair<std::size_t, std::size_t>> links;
  if (d.rows() < 2) return links;
  const NeighborIndex index(d.features(), metric);
  std::vector<std::size_t> nn(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) nn[i] = index.query_indices(d.row(i), 1, i).front();
  for (std::size_t a = 0; a < d.rows(); ++a) {
    const std::size_t b = nn[a];
    if (a < b && nn[b] == a && d.label(a) != d.label(b)) links.emplace_back(a, b);
  }
  return links;
}

Dataset tomek_remove(const Dataset& d, Metric metric) {
  const Label major = d.count(1) > d.count(0) ? Label{1} : Label{0};
  std::vector<bool> keep(d.rows(), true);
  for (const auto& [a, b] : tomek_links(d, metric)) keep[d.label(a) == major ? a : b] = false;
  return keep_marked(d, keep);
}

Dataset smote_enn(const Dataset& train, std::size_t k_smote, std::size_t k_enn, std::uint64_t seed) {
  return enn_clean(smote(train, k_smote, seed), k_enn);
}

Dataset smote_tomek(const Dataset& train, std::size_t k_smote, std::uint64_t seed) {
  return tomek_remove(smote(train, k_smote, seed));
}

}  // namespace txanomaly
