#ifndef BIS_ERROR_HPP
#define BIS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite loss, singular system, degenerate fit (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace bis

#endif  // BIS_ERROR_HPP
