#pragma once

#include <stdexcept>
#include <string>

namespace mmsense {

// Error taxonomy shared by every module. The CLI maps each family onto a
// distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, flags, or shape contracts between caller and library.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape contract violated by an operator's arguments.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Missing, truncated, or malformed on-disk data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or numerical check failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmsense
