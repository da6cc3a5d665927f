#include "txanomaly/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "txanomaly/error.hpp"

namespace txanomaly {

const std::vector<std::string>& paper_schema() {
  static const std::vector<std::string> schema = {
      "indegree",      "outdegree",     "in_btc",       "out_btc",
      "total_btc",     "mean_in_btc",   "mean_out_btc", "in_malicious",
      "out_malicious", "is_malicious",  "all_malicious", std::string(kLabelColumn)};
  return schema;
}

const std::vector<std::string>& reduced_schema() {
  static const std::vector<std::string> schema = {
      "indegree",    "in_btc",       "out_btc", "total_btc",
      "mean_in_btc", "mean_out_btc", std::string(kLabelColumn)};
  return schema;
}

const std::vector<std::string>& default_drop_policy() {
  static const std::vector<std::string> drop = {"outdegree", "in_malicious", "out_malicious",
                                                "is_malicious", "all_malicious"};
  return drop;
}

Dataset::Dataset(std::vector<std::string> column_names, std::vector<double> values,
                 std::vector<Label> labels, std::string label_name)
    : column_names_(std::move(column_names)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      label_name_(std::move(label_name)) {
  std::set<std::string_view> seen;
  for (const auto& name : column_names_) {
    if (!seen.insert(name).second) throw SchemaError("duplicate column name '" + name + "'");
    if (name == label_name_) throw SchemaError("label column '" + name + "' listed as a feature");
  }
  if (values_.size() != labels_.size() * column_names_.size()) {
    throw InvalidArgument("value count does not match rows x columns");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("dataset values must be finite");
  }
  for (Label l : labels_) {
    if (l > 1) throw InvalidArgument("labels must be 0 or 1");
  }
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < column_names_.size(); ++j) {
    if (column_names_[j] == name) return j;
  }
  return std::nullopt;
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
  return out;
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::vector<std::size_t> Dataset::indices_of(Label label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) out.push_back(i);
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * cols());
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= rows()) throw InvalidArgument("subset index out of range");
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  Dataset out;
  out.column_names_ = column_names_;
  out.label_name_ = label_name_;
  out.values_ = std::move(values);
  out.labels_ = std::move(labels);
  return out;
}

Dataset Dataset::concat(const Dataset& extra) const {
  if (extra.column_names_ != column_names_) {
    throw SchemaError("cannot concatenate datasets with different columns");
  }
  Dataset out = *this;
  out.values_.insert(out.values_.end(), extra.values_.begin(), extra.values_.end());
  out.labels_.insert(out.labels_.end(), extra.labels_.begin(), extra.labels_.end());
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string join(std::span<const std::string> names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

}  // namespace

Dataset read_csv(std::istream& in, std::span<const std::string> schema) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw SchemaError("empty file: missing header");

  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(trim(f));

  if (!schema.empty()) {
    std::vector<std::string> missing;
    std::vector<std::string> extra;
    for (const auto& want : schema) {
      if (std::find(header.begin(), header.end(), want) == header.end()) missing.push_back(want);
    }
    for (const auto& got : header) {
      if (std::find(schema.begin(), schema.end(), got) == schema.end()) extra.push_back(got);
    }
    if (!missing.empty() || !extra.empty()) {
      throw SchemaError("header mismatch: missing [" + join(missing) + "], unexpected [" +
                        join(extra) + "]");
    }
    if (!std::equal(header.begin(), header.end(), schema.begin(), schema.end())) {
      throw SchemaError("header columns out of order; expected " + join(schema));
    }
  }
  if (header.size() < 2) throw SchemaError("need at least one feature and a label column");

  const std::size_t d = header.size() - 1;
  const std::string label_name = header.back();
  std::vector<std::string> features(header.begin(), header.end() - 1);

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(row, "", "row " + std::to_string(row) + ": expected " +
                                    std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j <= d; ++j) {
      const auto cell = trim(fields[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(row, header[j],
                         "row " + std::to_string(row) + ", column '" + header[j] +
                             "': cannot parse '" + std::string(cell) + "' as a finite number");
      }
      if (j < d) {
        values.push_back(v);
      } else {
        if (v != 0.0 && v != 1.0) {
          throw ParseError(row, header[j],
                           "row " + std::to_string(row) + ", column '" + header[j] +
                               "': label must be 0 or 1, got '" + std::string(cell) + "'");
        }
        labels.push_back(static_cast<Label>(v));
      }
    }
  }
  if (labels.empty()) throw SchemaError("empty file: no data rows");
  return Dataset(std::move(features), std::move(values), std::move(labels), label_name);
}

Dataset load_csv(const std::filesystem::path& path, std::span<const std::string> schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return read_csv(in, schema);
}

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

void write_csv(const Dataset& d, std::ostream& out) {
  std::string line = join(d.column_names());
  line += ',';
  line += d.label_name();
  line += '\n';
  out << line;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    line.clear();
    for (double v : d.row(i)) {
      append_number(line, v);
      line += ',';
    }
    line += d.label(i) ? '1' : '0';
    line += '\n';
    out << line;
  }
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(d, out);
}

}  // namespace txanomaly
