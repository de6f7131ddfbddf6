#pragma once

#include <stdexcept>
#include <string>

namespace onn {

// Bad shapes, bad keys, impossible model configurations. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable files, malformed records, corrupt caches. Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runtime failures inside a training step (non-finite gradients, BN batch of one).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric is not defined for the given input (single class, zero variance, empty).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace onn
