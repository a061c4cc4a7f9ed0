#pragma once

#include <stdexcept>
#include <string>

namespace ldpx {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was not met by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A tail level, tilt, or time lies outside the admissible window.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A structural hypothesis (simplicity, convexity, positivity, decay) failed numerically.
class ConditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to reach its accuracy target or overflowed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or model description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ldpx
