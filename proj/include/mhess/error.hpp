#pragma once

#include <stdexcept>
#include <string>

namespace mhess {

/// Invalid grid, parameter or configuration value.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or unsupported field file.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// A field left the admissible cone where the operation requires it.
class ConeError : public std::domain_error {
 public:
  explicit ConeError(const std::string& what) : std::domain_error(what) {}
};

/// Iterative method failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mhess
