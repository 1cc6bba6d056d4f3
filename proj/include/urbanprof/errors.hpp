#pragma once

#include <stdexcept>
#include <string>

namespace urbanprof {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter values (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-convergence, singular systems (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace urbanprof
