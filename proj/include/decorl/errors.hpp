#pragma once

#include <stdexcept>
#include <string>

namespace decorl {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand shapes do not compose (matrix products, batch widths, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An API was called out of order or with inconsistent arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the amount of available data failed (e.g. sampling a
/// minibatch from a buffer that is still filling up). Callers are expected
/// to recover by waiting for more data.
class NotReadyError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity reached a place that requires finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or malformed config/log file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A log or checkpoint file failed to parse (corruption, truncation).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace decorl
