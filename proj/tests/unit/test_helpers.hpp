#pragma once

#include <vector>

#include <Eigen/Dense>

#include "manifold/constraint_system.hpp"
#include "manifold/rng.hpp"
#include "manifold/sampler.hpp"

namespace test_helpers {

using manifold::Rng;
using manifold::SparseMatrix;
using manifold::Triplet;
using manifold::Vector;

inline SparseMatrix makeSparse(int rows, int cols,
                               const std::vector<Triplet>& triplets) {
  SparseMatrix A(rows, cols);
  A.setFromTriplets(triplets.begin(), triplets.end());
  return A;
}

/// Random sparse symmetric positive definite matrix: random off-diagonal
/// pattern, diagonally dominant values.
inline SparseMatrix randomSparseSpd(int n, double density, Rng& rng) {
  std::vector<Triplet> triplets;
  Vector offdiag = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    for (int i = j + 1; i < n; ++i) {
      if (rng.uniform() < density) {
        double v = 2.0 * rng.uniform() - 1.0;
        triplets.emplace_back(i, j, v);
        triplets.emplace_back(j, i, v);
        offdiag[i] += std::abs(v);
        offdiag[j] += std::abs(v);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, offdiag[i] + 1.0 + rng.uniform());
  }
  return makeSparse(n, n, triplets);
}

/// Random sparse square matrix, comfortably invertible.
inline SparseMatrix randomSparseSquare(int n, double density, Rng& rng) {
  std::vector<Triplet> triplets;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i != j && rng.uniform() < density) {
        triplets.emplace_back(i, j, 2.0 * rng.uniform() - 1.0);
      }
    }
    triplets.emplace_back(j, j, 3.0 + rng.uniform());
  }
  return makeSparse(n, n, triplets);
}

inline Eigen::MatrixXd dense(const SparseMatrix& A) {
  return Eigen::MatrixXd(A);
}

/// Central finite differences of the constraints; columns are gradients.
inline Eigen::MatrixXd fdJacobian(const manifold::ConstraintSystem& system,
                                  const Vector& x, double h = 1e-6) {
  Eigen::MatrixXd J(system.numVariables(), system.numConstraints());
  Vector xp = x, xm = x;
  for (int j = 0; j < system.numVariables(); ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    J.row(j) = (system.constraints(xp) - system.constraints(xm)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

/// States visited by a short chain, for on-manifold test points.
inline std::vector<Vector> chainPoints(const manifold::BuiltSystem& bs,
                                       manifold::SamplerParams params,
                                       std::uint64_t seed, int count,
                                       long stride = 25) {
  manifold::ManifoldSampler sampler(bs.system, params);
  Rng rng(seed);
  manifold::ChainState state = sampler.makeState(bs.initial);
  std::vector<Vector> points;
  points.reserve(count);
  sampler.run(state, rng, stride * count, stride,
              [&](long, const manifold::ChainState& s) {
                points.push_back(s.x);
              });
  return points;
}

}  // namespace test_helpers
