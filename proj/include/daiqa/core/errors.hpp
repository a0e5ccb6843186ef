#pragma once

#include <stdexcept>
#include <string>

namespace daiqa {

// Exception families map onto the CLI exit codes (see pipeline/commands.hpp).

/// Bad configuration: unknown keys, out-of-range values, mismatched checkpoints.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Missing or undecodable data: empty directories, unlabeled manifests.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite loss or degenerate numerics during training.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace daiqa
