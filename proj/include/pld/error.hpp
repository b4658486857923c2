// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pld {

/// Bad argument to a numeric kernel (shape mismatch, non-finite value,
/// out-of-range label, non-positive temperature, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Request exceeds a hard size guard (factorial enumeration).
class SizeLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A training loop produced a non-finite loss.
class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(int epoch, const std::string& what)
      : std::runtime_error("training failure at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unknown fields in a run configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Landscape Gram-Schmidt could not produce independent directions.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace pld
