#pragma once

#include <stdexcept>

namespace nzprop {

/// An input violates a documented precondition or invariant.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numeric routine failed (non-convergence, non-finite intermediate).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A file could not be read/written or its text is malformed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nzprop
