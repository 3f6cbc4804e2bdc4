#pragma once

#include <cstdint>

#include "manifold/constraint_system.hpp"

namespace manifold::systems {

/// 3-d chain of n free vertices joined by unit-length bars, with both ends
/// tied to fixed anchors at (0,0,0) and (n/2,0,0). n_vars = 3n, m = n+1,
/// f = 1. The initial configuration is a planar zig-zag with exact unit
/// bonds.
BuiltSystem buildPolymer(int n);

/// Rest length used for the diagonal-energy term of the lattice.
enum class LatticeTarget {
  Diagonal,  // sqrt(2), the rest length of a unit block's diagonal
  Scaled,    // s/sqrt(2), growing with the lattice side
};

/// s x s planar square lattice of unit bars (n = s^2 vertices, n_vars = 2n,
/// m = 2n - 2s), with a diagonal-spring energy
///   log f = -k * sum_d (|d| - target)^2,  k = 5,
/// summed over both diagonals of every unit block, which keeps the lattice
/// from collapsing onto itself.
BuiltSystem buildLattice(int s, LatticeTarget target = LatticeTarget::Diagonal);

/// Special orthogonal group SO(s) as s^2 variables with row orthonormality
/// constraints: n_vars = s^2, m = s(s+1)/2, f = 1. Starts at the identity.
BuiltSystem buildOrthogonalGroup(int s);

/// Random polygon frame: n vertices placed on a circle with unit spacing,
/// joined into an n-gon, plus n distinct random chords. The vertices are
/// then perturbed (z ~ N(0, 0.5^2), radius scaled by U[0.6, 1]) and all bar
/// lengths are measured from the perturbed configuration, so it is feasible
/// by construction. n_vars = 3n, m = 2n, f = 1. The same seed reproduces
/// the same graph and configuration. Throws BuildError if no valid chord
/// set is found (n = 4 has too few non-polygon pairs).
BuiltSystem buildNgon(int n, std::uint64_t seed);

/// Analytic verification manifolds.
BuiltSystem buildCircle();                       // |x|^2 = 1 in R^2
BuiltSystem buildSphere();                       // |x|^2 = 1 in R^3
BuiltSystem buildEllipse(double a, double b);    // x1^2/a^2 + x2^2/b^2 = 1
BuiltSystem buildTorus(double R, double r);      // (sqrt(x1^2+x2^2)-R)^2 + x3^2 = r^2

}  // namespace manifold::systems
