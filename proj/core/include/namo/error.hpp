#pragma once

#include <stdexcept>
#include <string>

namespace namo {

/// Raised for contract violations of the NAMO engine (bad geometry, invalid
/// covariances, infeasible decisions). The message is the stable part of the
/// contract; callers and tests match on it.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent scenario / experiment configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace namo
