#pragma once

#include <stdexcept>
#include <string>

namespace fd {

// Shape/dimension mismatch between tensors (message names both shapes).
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Index outside a valid range (message names the offending index).
class BoundsError : public std::runtime_error {
 public:
  explicit BoundsError(const std::string& msg) : std::runtime_error(msg) {}
};

// API precondition violated (non-scalar loss, bad ratio, eps=0, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite or otherwise invalid numerical state.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// File parsing / serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad CLI flag or config-file key/value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fd
