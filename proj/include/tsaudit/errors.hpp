#pragma once

#include <stdexcept>
#include <string>

namespace tsaudit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration values, impossible geometry, unsupported options.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or degenerate input data (parse failures, empty datasets).
struct DataError : Error {
  using Error::Error;
};

// Operand shapes do not line up.
struct DimensionError : Error {
  using Error::Error;
};

// Out-of-range index (class labels, rows).
struct IndexError : Error {
  using Error::Error;
};

// Non-finite values, divergence during training.
struct NumericError : Error {
  using Error::Error;
};

// API contract violated by the caller (e.g. backward on a non-scalar).
struct ContractError : Error {
  using Error::Error;
};

}  // namespace tsaudit
