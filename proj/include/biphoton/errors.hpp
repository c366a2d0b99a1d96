#pragma once

#include <stdexcept>
#include <string>

namespace biphoton {

/// Bad user input: malformed config, invalid parameter values.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: sampling criterion violated, fit did not converge,
/// grid too narrow for the requested field.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace biphoton
