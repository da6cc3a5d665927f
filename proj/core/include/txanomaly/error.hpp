#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace txanomaly {

// Base for every error raised by the toolkit. The CLI maps SchemaError and
// ConfigError to exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input does not satisfy the documented preconditions of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Column layout or header problems in tabular input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A cell that could not be parsed. Rows are 1-based data rows (header excluded).
class ParseError : public SchemaError {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : SchemaError(what), row_(row), column_(std::move(column)) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// The statistic or model is undefined for the given data.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Not enough rows of some class to honour a stratified request.
class StratificationError : public Error {
 public:
  using Error::Error;
};

// XGBCLUS finished all iterations without accepting a candidate subset. The
// caller is expected to retry with different TMAX/FMIN thresholds.
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

// The KernelSHAP regression system is rank deficient.
class InsufficientCoalitions : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace txanomaly
