#pragma once

#include <stdexcept>
#include <string>

namespace gpemu {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid input data or parameters (dimension mismatch, out-of-range values, ...).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Correlation matrix could not be factorized at any jitter level.
class NotPositiveDefiniteError : public Error {
 public:
  explicit NotPositiveDefiniteError(const std::string& what) : Error(what) {}
};

/// Model fitting aborted (e.g. every candidate failed factorization).
class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(what) {}
};

/// Malformed configuration (bench config file, backend identifier, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace gpemu
