#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace txanomaly {

using Label = std::uint8_t;

inline constexpr std::string_view kLabelColumn = "out_and_tx_malicious";

// The 12-column layout of the raw transaction export (11 features + label).
const std::vector<std::string>& paper_schema();
// The 7-column layout after feature selection (6 features + label).
const std::vector<std::string>& reduced_schema();
// Features removed by the default selection policy.
const std::vector<std::string>& default_drop_policy();

// Non-owning row-major view of an N x D matrix.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(std::span<const double> data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const { return data_.subspan(i * cols_, cols_); }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const { return data_; }

 private:
  std::span<const double> data_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

// Feature matrix with named columns and a binary anomaly label per row.
// Immutable after construction; the constructor enforces every invariant.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> column_names, std::vector<double> values,
          std::vector<Label> labels, std::string label_name = std::string(kLabelColumn));

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return column_names_.size(); }
  bool empty() const { return labels_.empty(); }

  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::string& label_name() const { return label_name_; }
  std::optional<std::size_t> column_index(std::string_view name) const;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cols(), cols());
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
  Label label(std::size_t i) const { return labels_[i]; }
  std::span<const Label> labels() const { return labels_; }
  std::span<const double> values() const { return values_; }
  MatrixView features() const { return MatrixView(values_, rows(), cols()); }
  std::vector<double> column(std::size_t j) const;

  std::size_t count(Label label) const;
  std::vector<std::size_t> indices_of(Label label) const;

  // Rows in the given order; indices may repeat.
  Dataset subset(std::span<const std::size_t> indices) const;
  // Same columns; `extra` rows appended after this one's.
  Dataset concat(const Dataset& extra) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<std::string> column_names_;
  std::vector<double> values_;
  std::vector<Label> labels_;
  std::string label_name_ = std::string(kLabelColumn);
};

// Reads a comma-separated file with a header. `schema` lists the expected
// header (features followed by the label column, which must be last). An
// empty schema accepts any header whose final column is the label.
Dataset load_csv(const std::filesystem::path& path, std::span<const std::string> schema = {});
Dataset read_csv(std::istream& in, std::span<const std::string> schema = {});

// Writes header + rows. Values use the shortest round-trip representation.
void write_csv(const Dataset& d, std::ostream& out);
void save_csv(const Dataset& d, const std::filesystem::path& path);

struct SplitPair {
  Dataset train;
  Dataset test;
  // Row indices into the input, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

struct TTestResult {
  std::string feature;
  double t_value = 0.0;
  double p_value = 1.0;
  double degrees_of_freedom = 0.0;
};

// Welch's unequal-variance t-test with unbiased sample variances.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         std::string feature = {});

// Per-feature Welch test of positives against negatives.
std::vector<TTestResult> feature_t_tests(const Dataset& d);

Dataset select_features(const Dataset& d, std::span<const std::string> drop);

// Keeps every positive row; among negatives only the first occurrence of each
// exact feature vector survives. Order is preserved.
Dataset dedup_majority(const Dataset& d);

// Keeps at most `max_negatives` negatives chosen uniformly under `seed`,
// preserving relative order. All positives are kept.
Dataset cap_negatives(const Dataset& d, std::size_t max_negatives, std::uint64_t seed);

SplitPair stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed);

// Per-class fold index in [0, folds) for every row; each fold receives
// floor or ceil of class_count / folds rows of every class.
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds,
                                          std::uint64_t seed);

enum class SyntheticSchema { kReduced, kPaper };

// Log-normal transaction-like features. Negatives and positives share every
// feature distribution except total_btc, mean_in_btc and mean_out_btc, where
// the positive cluster is displaced in log space; the displacement vector has
// Euclidean length `separation` in units of the per-feature log-scale standard
// deviation. Rows are shuffled.
Dataset gen_synthetic(std::size_t n_major, std::size_t n_minor, double separation,
                      std::uint64_t seed, SyntheticSchema schema = SyntheticSchema::kReduced);

// D x D Pearson correlation matrix, row-major.
std::vector<double> pearson_correlation(const Dataset& d);
void write_correlation_csv(const Dataset& d, std::span<const double> corr, std::ostream& out);

}  // namespace txanomaly
