#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <unordered_set>

#include <boost/math/special_functions/beta.hpp>

#include "txanomaly/dataset.hpp"
#include "txanomaly/error.hpp"
#include "txanomaly/random.hpp"

namespace txanomaly {

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

Moments moments(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / static_cast<double>(x.size() - 1)};
}

}  // namespace

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         std::string feature) {
  if (a.size() < 2 || b.size() < 2) {
    throw InvalidArgument("welch_t_test needs at least two values per group");
  }
  const auto ma = moments(a);
  const auto mb = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = ma.variance / na;
  const double sb = mb.variance / nb;

  TTestResult r;
  r.feature = std::move(feature);
  if (sa + sb == 0.0) {
    if (ma.mean == mb.mean) {
      throw DegenerateInput("t statistic undefined: both groups constant and equal" +
                            (r.feature.empty() ? std::string() : " for '" + r.feature + "'"));
    }
    r.t_value = ma.mean > mb.mean ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
    r.degrees_of_freedom = na + nb - 2.0;
    r.p_value = 0.0;
    return r;
  }
  r.t_value = (ma.mean - mb.mean) / std::sqrt(sa + sb);
  r.degrees_of_freedom = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  // Two-tailed tail mass: P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
  const double df = r.degrees_of_freedom;
  const double x = df / (df + r.t_value * r.t_value);
  r.p_value = std::clamp(boost::math::ibeta(df / 2.0, 0.5, x), 0.0, 1.0);
  return r;
}

std::vector<TTestResult> feature_t_tests(const Dataset& d) {
  const auto pos = d.indices_of(1);
  const auto neg = d.indices_of(0);
  std::vector<TTestResult> out;
  out.reserve(d.cols());
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t j = 0; j < d.cols(); ++j) {
    a.clear();
    b.clear();
    for (std::size_t i : pos) a.push_back(d.at(i, j));
    for (std::size_t i : neg) b.push_back(d.at(i, j));
    out.push_back(welch_t_test(a, b, d.column_names()[j]));
  }
  return out;
}

Dataset select_features(const Dataset& d, std::span<const std::string> drop) {
  std::vector<bool> dropped(d.cols(), false);
  for (const auto& name : drop) {
    if (name == d.label_name()) throw InvalidArgument("cannot drop the label column '" + name + "'");
    const auto j = d.column_index(name);
    if (!j) throw InvalidArgument("cannot drop unknown column '" + name + "'");
    dropped[*j] = true;
  }
  std::vector<std::string> names;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < d.cols(); ++j) {
    if (!dropped[j]) {
      keep.push_back(j);
      names.push_back(d.column_names()[j]);
    }
  }
  std::vector<double> values;
  values.reserve(d.rows() * keep.size());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j : keep) values.push_back(d.at(i, j));
  }
  return Dataset(std::move(names), std::move(values),
                 std::vector<Label>(d.labels().begin(), d.labels().end()), d.label_name());
}

namespace {

// Hash/equality over the bit patterns of a row so that 0.0 and -0.0 (which
// compare equal) are the only values treated specially.
struct RowKey {
  const Dataset* d;
  std::size_t row;
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : k.d->row(k.row)) {
      if (v == 0.0) v = 0.0;
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = splitmix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
};

struct RowKeyEq {
  bool operator()(const RowKey& x, const RowKey& y) const {
    const auto a = x.d->row(x.row);
    const auto b = y.d->row(y.row);
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
  }
};

}  // namespace

Dataset dedup_majority(const Dataset& d) {
  std::unordered_set<RowKey, RowKeyHash, RowKeyEq> seen;
  std::vector<std::size_t> keep;
  keep.reserve(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (d.label(i) == 1 || seen.insert(RowKey{&d, i}).second) keep.push_back(i);
  }
  return d.subset(keep);
}

Dataset cap_negatives(const Dataset& d, std::size_t max_negatives, std::uint64_t seed) {
  const auto neg = d.indices_of(0);
  if (neg.size() <= max_negatives) return d;
  Rng rng(seed);
  const auto picks = sample_without_replacement(rng, neg.size(), max_negatives);
  std::vector<bool> chosen(d.rows(), false);
  for (std::size_t p : picks) chosen[neg[p]] = true;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (d.label(i) == 1 || chosen[i]) keep.push_back(i);
  }
  return d.subset(keep);
}

SplitPair stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must lie in (0, 1)");
  }
  std::vector<bool> in_test(d.rows(), false);
  for (Label c : {Label{0}, Label{1}}) {
    auto rows = d.indices_of(c);
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      throw StratificationError("class " + std::to_string(c) + " has " +
                                std::to_string(rows.size()) +
                                " row; stratified split needs at least 2");
    }
    Rng rng(derive_seed(seed, std::uint64_t{c}));
    shuffle_indices(rng, rows);
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(rows.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    for (std::size_t k = 0; k < n_test; ++k) in_test[rows[k]] = true;
  }
  SplitPair out;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    (in_test[i] ? out.test_rows : out.train_rows).push_back(i);
  }
  out.train = d.subset(out.train_rows);
  out.test = d.subset(out.test_rows);
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("need at least 2 folds");
  std::vector<std::size_t> fold_of(labels.size(), 0);
  for (Label c : {Label{0}, Label{1}}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) rows.push_back(i);
    }
    if (rows.size() < folds) {
      throw StratificationError("class " + std::to_string(c) + " has " +
                                std::to_string(rows.size()) + " rows; cannot fill " +
                                std::to_string(folds) + " stratified folds");
    }
    Rng rng(derive_seed(seed, std::uint64_t{c}));
    shuffle_indices(rng, rows);
    for (std::size_t k = 0; k < rows.size(); ++k) fold_of[rows[k]] = k % folds;
  }
  return fold_of;
}

std::vector<double> pearson_correlation(const Dataset& d) {
  const std::size_t n = d.rows();
  const std::size_t p = d.cols();
  if (n < 2) throw InvalidArgument("correlation needs at least two rows");
  std::vector<double> centered(n * p);
  std::vector<double> norm(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += d.at(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = d.at(i, j) - mean;
      centered[j * n + i] = c;
      ss += c * c;
    }
    if (ss == 0.0) throw DegenerateInput("column '" + d.column_names()[j] + "' is constant");
    norm[j] = std::sqrt(ss);
  }
  std::vector<double> corr(p * p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    corr[a * p + a] = 1.0;
    for (std::size_t b = a + 1; b < p; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += centered[a * n + i] * centered[b * n + i];
      const double r = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
      corr[a * p + b] = r;
      corr[b * p + a] = r;
    }
  }
  return corr;
}

void write_correlation_csv(const Dataset& d, std::span<const double> corr, std::ostream& out) {
  const std::size_t p = d.cols();
  out << "feature";
  for (const auto& name : d.column_names()) out << ',' << name;
  out << '\n';
  char buf[32];
  for (std::size_t a = 0; a < p; ++a) {
    out << d.column_names()[a];
    for (std::size_t b = 0; b < p; ++b) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, corr[a * p + b]);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace txanomaly
