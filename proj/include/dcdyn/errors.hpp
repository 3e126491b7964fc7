#pragma once

#include <stdexcept>
#include <string>

namespace dcdyn {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario or parameter set. Raised before or during initialization.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Physically invalid model state (non-finite values, stalled motor, unstable machine).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// File system or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcdyn
