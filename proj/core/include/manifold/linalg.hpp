#pragma once

#include <memory>
#include <optional>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "manifold/types.hpp"

namespace manifold::linalg {

using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

/// Relative pivot floor: a Cholesky factorization whose smallest pivot falls
/// below kPivotFloor times the largest is reported as singular rather than
/// returned as a nearly rank-deficient factor.
inline constexpr double kPivotFloor = 1e-13;

/// Q^T Q with a symmetric structural pattern. The pattern depends only on
/// the pattern of Q (structural zeros are kept), so matrices built from
/// Jacobians with a fixed pattern share a pattern themselves.
SparseMatrix normalMatrix(const SparseMatrix& Q);

/// Immutable sparse Cholesky factor: P A P^T = L L^T with L lower triangular
/// and a fill-reducing permutation P. Safe to share across threads.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  const SparseMatrix& matrixL() const { return L_; }
  const Permutation& permutation() const { return perm_; }

  /// diag(L); the product of these entries is sqrt(det A).
  const Vector& diagonal() const { return diag_; }

  int order() const { return static_cast<int>(L_.rows()); }

  /// Solve A x = b by permuted forward/backward substitution.
  Vector solve(const Vector& b) const;

 private:
  friend class CholeskySolver;
  CholeskyFactor(SparseMatrix L, Permutation perm);

  SparseMatrix L_;
  Permutation perm_;
  Vector diag_;
};

/// Holds the symbolic analysis (AMD ordering + elimination structure) for one
/// sparsity pattern. Every factorize() call reuses it, which both saves the
/// analysis cost and pins a single permutation for all factors of the same
/// pattern, so their diagonal entries pair up consistently.
///
/// factorize() mutates internal scratch state: use one solver per chain (or
/// thread). The factors it returns are immutable.
class CholeskySolver {
 public:
  /// Runs the symbolic analysis on the pattern of `pattern` (values ignored).
  explicit CholeskySolver(const SparseMatrix& pattern);

  /// Numeric factorization of A, which must have the analyzed pattern.
  /// Returns nullopt if A is not positive definite to within kPivotFloor.
  std::optional<CholeskyFactor> factorize(const SparseMatrix& A);

 private:
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

/// One-shot factorization (fresh symbolic analysis).
std::optional<CholeskyFactor> cholesky(const SparseMatrix& A);

/// Immutable sparse LU factorization with partial pivoting and COLAMD column
/// ordering: Pr A Pc^T = L U. Cheap to copy (shared internals).
class LUFactor {
 public:
  Vector solve(const Vector& b) const;

  const Permutation& rowsPermutation() const;
  const Permutation& colsPermutation() const;

  /// Apply L^{-1} / U^{-1} to dense columns; used to reconstruct the factors
  /// in contract tests.
  Eigen::MatrixXd solveLowerDense(Eigen::MatrixXd b) const;
  Eigen::MatrixXd solveUpperDense(Eigen::MatrixXd b) const;

 private:
  friend std::optional<LUFactor> lu(const SparseMatrix&);
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// LU-factorize a square sparse matrix; nullopt on a zero pivot.
std::optional<LUFactor> lu(const SparseMatrix& A);

}  // namespace manifold::linalg
