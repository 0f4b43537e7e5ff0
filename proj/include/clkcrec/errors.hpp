#pragma once

#include <stdexcept>
#include <string>

namespace clk {

// Dimension mismatch between operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad API usage (index out of range, loss not on tape, ...).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value or unknown key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data or file format.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schema violation while loading a dataset; carries the offending line.
struct SchemaError : DataError {
  SchemaError(const std::string& msg, long line)
      : DataError(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
  long line_number;
};

// Mathematically degenerate input (zero-norm vector, negative entry, ...).
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered during training/inference.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace clk
