#pragma once

#include <memory>
#include <string>

#include "manifold/types.hpp"

namespace manifold {

/// A level-set description of a manifold: m smooth constraint functions
/// q_i on R^n (m < n), their sparse Jacobian, and an unnormalized
/// log-density log f.
///
/// Contract for implementations:
///  - evaluation methods are const, stateless and thread-safe;
///  - the Jacobian's structural pattern is fixed: evalJacobian produces the
///    same structural nonzeros for every x (entries may be numerically zero);
///  - columns of the Jacobian are the constraint gradients ∇q_i.
class ConstraintSystem {
 public:
  ConstraintSystem(int n_vars, int n_constraints, std::string name)
      : n_vars_(n_vars), m_(n_constraints), name_(std::move(name)) {}
  virtual ~ConstraintSystem() = default;

  int numVariables() const { return n_vars_; }
  int numConstraints() const { return m_; }
  const std::string& name() const { return name_; }

  virtual void evalConstraints(const Vector& x, Vector& q_out) const = 0;
  virtual void evalJacobian(const Vector& x, SparseMatrix& Q_out) const = 0;
  virtual double logDensity(const Vector& /*x*/) const { return 0.0; }

  Vector constraints(const Vector& x) const {
    Vector q(m_);
    evalConstraints(x, q);
    return q;
  }

  SparseMatrix jacobian(const Vector& x) const {
    SparseMatrix Q(n_vars_, m_);
    evalJacobian(x, Q);
    return Q;
  }

  /// |q(x)|_inf, the distance-from-manifold measure used throughout.
  double constraintError(const Vector& x) const {
    return constraints(x).lpNorm<Eigen::Infinity>();
  }

 private:
  int n_vars_;
  int m_;
  std::string name_;
};

/// A system together with a feasible starting point
/// (|q(initial)|_inf < 1e-12).
struct BuiltSystem {
  std::shared_ptr<const ConstraintSystem> system;
  Vector initial;
};

}  // namespace manifold
