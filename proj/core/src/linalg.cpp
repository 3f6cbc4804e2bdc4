#include "manifold/linalg.hpp"

#include <cassert>
#include <utility>

namespace manifold::linalg {

SparseMatrix normalMatrix(const SparseMatrix& Q) {
  SparseMatrix Qt = Q.transpose();
  SparseMatrix A = Qt * Q;
  assert(A.isCompressed());
  return A;
}

CholeskyFactor::CholeskyFactor(SparseMatrix L, Permutation perm)
    : L_(std::move(L)), perm_(std::move(perm)), diag_(L_.diagonal()) {}

Vector CholeskyFactor::solve(const Vector& b) const {
  assert(b.size() == L_.rows());
  Vector w = perm_ * b;
  L_.triangularView<Eigen::Lower>().solveInPlace(w);
  L_.triangularView<Eigen::Lower>().transpose().solveInPlace(w);
  return perm_.inverse() * w;
}

CholeskySolver::CholeskySolver(const SparseMatrix& pattern) {
  llt_.analyzePattern(pattern);
}

std::optional<CholeskyFactor> CholeskySolver::factorize(const SparseMatrix& A) {
  llt_.factorize(A);
  if (llt_.info() != Eigen::Success) {
    return std::nullopt;  // non-positive pivot
  }
  SparseMatrix L = llt_.matrixL();
  Vector diag = L.diagonal();
  // Pivots of the factorization are diag(L)^2.
  double pivot_max = diag.array().square().maxCoeff();
  double pivot_min = diag.array().square().minCoeff();
  if (!(pivot_max > 0.0) || pivot_min < kPivotFloor * pivot_max) {
    return std::nullopt;
  }
  return CholeskyFactor(std::move(L), llt_.permutationP());
}

std::optional<CholeskyFactor> cholesky(const SparseMatrix& A) {
  CholeskySolver solver(A);
  return solver.factorize(A);
}

struct LUFactor::Impl {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
};

Vector LUFactor::solve(const Vector& b) const { return impl_->lu.solve(b); }

const Permutation& LUFactor::rowsPermutation() const {
  return impl_->lu.rowsPermutation();
}

const Permutation& LUFactor::colsPermutation() const {
  return impl_->lu.colsPermutation();
}

Eigen::MatrixXd LUFactor::solveLowerDense(Eigen::MatrixXd b) const {
  impl_->lu.matrixL().solveInPlace(b);
  return b;
}

Eigen::MatrixXd LUFactor::solveUpperDense(Eigen::MatrixXd b) const {
  impl_->lu.matrixU().solveInPlace(b);
  return b;
}

std::optional<LUFactor> lu(const SparseMatrix& A) {
  assert(A.rows() == A.cols());
  auto impl = std::make_shared<LUFactor::Impl>();
  impl->lu.analyzePattern(A);
  impl->lu.factorize(A);
  if (impl->lu.info() != Eigen::Success) {
    return std::nullopt;
  }
  LUFactor factor;
  factor.impl_ = std::move(impl);
  return factor;
}

}  // namespace manifold::linalg
