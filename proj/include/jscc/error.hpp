#pragma once

#include <stdexcept>
#include <string>

namespace jscc {

// Each error family maps to one CLI exit code (see run_cli in cli.hpp).

/// Invalid configuration values or infeasible geometry.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not chain.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller violated a function precondition (scale tags, window sizes, ...).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, zero-norm symbol vectors and other numerical faults.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset files missing, truncated or undecodable.
struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Checkpoint directories that are missing, corrupt or incompatible.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Experiment cells whose checkpoints are absent and may not be trained.
struct MissingCheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace jscc
