#pragma once

#include <stdexcept>
#include <string>

namespace klnmf {

/// Shapes of the operands do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid input data: negative or non-finite entries, malformed files,
/// missing paths.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver could not proceed from the current iterate (non-differentiable
/// point, zero-locked factor, broken internal invariant).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace klnmf
