#pragma once

#include <stdexcept>
#include <string>

namespace negrl {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (dimension mismatch, bad index, ...).
struct InvalidInputError : Error {
  using Error::Error;
};

/// Illegal action for the current protocol state.
struct ProtocolViolationError : Error {
  using Error::Error;
};

/// A configured capacity (outcome enumeration cap, ...) was exceeded.
struct CapacityError : Error {
  using Error::Error;
};

/// Random generation could not satisfy the configured constraints.
struct GenerationError : Error {
  using Error::Error;
};

/// Invalid configuration (bad keys, inconsistent values, missing files).
struct ConfigError : Error {
  using Error::Error;
};

/// Non-finite value produced where finite math is required.
struct NumericError : Error {
  using Error::Error;
};

/// Not enough samples for a statistic.
struct InsufficientDataError : Error {
  using Error::Error;
};

/// Filesystem / serialization failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace negrl
