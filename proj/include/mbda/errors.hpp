#pragma once

#include <stdexcept>
#include <string>

namespace mbda {

/// Invalid or inconsistent pipeline configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, empty or malformed input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fitted model that cannot be used as requested, e.g. a singular
/// score covariance or a component count above the data rank.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mbda
