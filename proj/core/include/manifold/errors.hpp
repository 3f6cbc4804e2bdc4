#pragma once

#include <stdexcept>

namespace manifold {

/// Thrown when a chain is started from a point that is not on the manifold
/// to within the projection tolerance, or whose constraint Jacobian is
/// rank-deficient.
struct SingularStartError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown by the step-size tuner when no bracket around the target
/// acceptance ratio can be found. Usually signals a degenerate system.
struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown by a system builder that cannot produce a valid instance.
struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace manifold
