#pragma once

#include <stdexcept>
#include <string>

namespace combtwin {

/// Invalid configuration or call-site parameters. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A documented precondition was violated by the caller (e.g. phase out of range).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// I/O failure, always carries the offending path. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace combtwin
