#include "manifold/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "manifold/errors.hpp"

namespace manifold {

const char* toString(NewtonVariant v) {
  return v == NewtonVariant::Symmetric ? "symmetric" : "traditional";
}

const char* toString(StepResult r) {
  switch (r) {
    case StepResult::Accepted:
      return "accepted";
    case StepResult::RejectedProjection:
      return "projection";
    case StepResult::RejectedMetropolis:
      return "metropolis";
    case StepResult::RejectedReverseProjection:
      return "reverse_projection";
    case StepResult::RejectedReverseMismatch:
      return "reverse_mismatch";
    case StepResult::RejectedSingular:
      return "singular";
  }
  return "unknown";
}

void SamplerParams::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (xtol < 0.0) throw std::invalid_argument("xtol must be >= 0");
}

TangentStep tangentStep(const ChainState& state, double sigma,
                        const Vector& noise) {
  Vector z = state.L.solve(state.Q.transpose() * noise);
  Vector v = sigma * (noise - state.Q * z);
  double norm_sq = v.squaredNorm();
  return {std::move(v), norm_sq};
}

TangentStep reverseTangent(const Vector& x, const Vector& y,
                           const SparseMatrix& Q_y,
                           const linalg::CholeskyFactor& L_y) {
  Vector r = x - y;
  Vector z = L_y.solve(Q_y.transpose() * r);
  Vector v = r - Q_y * z;
  double norm_sq = v.squaredNorm();
  return {std::move(v), norm_sq};
}

namespace {

/// Shared projection loop. `solveStep` maps the current residual q(y) to a
/// Newton update -delta_a, or reports a singular linear solve.
template <typename SolveStep>
ProjectionResult projectLoop(const Vector& z0, const SparseMatrix& Q,
                             const ConstraintSystem& system,
                             const SamplerParams& params,
                             SolveStep&& solveStep) {
  ProjectionResult res;
  res.coeffs = Vector::Zero(Q.cols());
  res.y = z0;
  Vector qval(system.numConstraints());
  double err_prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < params.max_iter; ++it) {
    system.evalConstraints(res.y, qval);
    ++res.iters;
    double err = qval.lpNorm<Eigen::Infinity>();
    if (err < params.tol) {
      res.success = true;
      return res;
    }
    if (!std::isfinite(err) || err > params.eta * err_prev) {
      return res;  // not contracting; give up and let the chain retry
    }
    err_prev = err;
    Vector delta;
    if (!solveStep(res.y, qval, delta)) {
      return res;  // singular iteration matrix
    }
    res.coeffs -= delta;
    res.y = z0 + Q * res.coeffs;
  }
  return res;
}

}  // namespace

ProjectionResult projectSymmetric(const Vector& z0, const SparseMatrix& Q,
                                  const linalg::CholeskyFactor& L,
                                  const ConstraintSystem& system,
                                  const SamplerParams& params) {
  return projectLoop(z0, Q, system, params,
                     [&](const Vector&, const Vector& qval, Vector& delta) {
                       delta = L.solve(qval);
                       return true;
                     });
}

ProjectionResult projectTraditional(const Vector& z0, const SparseMatrix& Q,
                                    const ConstraintSystem& system,
                                    const SamplerParams& params) {
  return projectLoop(
      z0, Q, system, params,
      [&](const Vector& y, const Vector& qval, Vector& delta) {
        SparseMatrix Q_y = system.jacobian(y);
        SparseMatrix M = SparseMatrix(Q_y.transpose()) * Q;
        auto factor = linalg::lu(M);
        if (!factor) return false;
        delta = factor->solve(qval);
        return true;
      });
}

ProjectionResult project(const Vector& z0, const SparseMatrix& Q,
                         const linalg::CholeskyFactor& L,
                         const ConstraintSystem& system,
                         const SamplerParams& params) {
  if (params.newton_variant == NewtonVariant::Symmetric) {
    return projectSymmetric(z0, Q, L, system, params);
  }
  return projectTraditional(z0, Q, system, params);
}

MetropolisRatio metropolisRatio(const ChainState& from, const ChainState& to,
                                const TangentStep& v_from,
                                const TangentStep& v_to,
                                const SamplerParams& params) {
  double vdiff = (v_to.norm_sq - v_from.norm_sq) /
                 (2.0 * params.sigma * params.sigma);
  double udiff = to.log_f - from.log_f;
  double det_ratio = 1.0;
  if (params.use_pseudodet) {
    const Vector& d_from = from.L.diagonal();
    const Vector& d_to = to.L.diagonal();
    for (int i = 0; i < d_from.size(); ++i) {
      det_ratio *= d_from[i] / d_to[i];
    }
  }
  double log_ratio = -vdiff + udiff + std::log(det_ratio);
  double acceptance =
      std::min(1.0, std::exp(-vdiff + udiff) * det_ratio);
  return {log_ratio, acceptance};
}

void ChainStats::record(const StepOutcome& outcome) {
  ++n_steps;
  ++by_result[static_cast<int>(outcome.result)];
  forward_iters_total += outcome.forward_iters;
  bool forward_failed = outcome.result == StepResult::RejectedProjection;
  if (forward_failed) {
    forward_iters_on_fail += outcome.forward_iters;
    ++forward_fail_count;
  } else {
    forward_iters_on_success += outcome.forward_iters;
    ++forward_success_count;
  }
  if (outcome.reverse_iters > 0) {
    reverse_iters_total += outcome.reverse_iters;
    ++reverse_attempts;
  }
}

namespace {
double ratioOrZero(double num, double den) { return den > 0 ? num / den : 0.0; }
}  // namespace

double ChainStats::acceptanceRate() const {
  return ratioOrZero(static_cast<double>(accepted()),
                     static_cast<double>(n_steps));
}

double ChainStats::rejectionFraction(StepResult r) const {
  return ratioOrZero(static_cast<double>(count(r)),
                     static_cast<double>(n_steps));
}

double ChainStats::meanForwardIters() const {
  return ratioOrZero(static_cast<double>(forward_iters_total),
                     static_cast<double>(n_steps));
}

double ChainStats::meanForwardItersOnSuccess() const {
  return ratioOrZero(static_cast<double>(forward_iters_on_success),
                     static_cast<double>(forward_success_count));
}

double ChainStats::meanForwardItersOnFail() const {
  return ratioOrZero(static_cast<double>(forward_iters_on_fail),
                     static_cast<double>(forward_fail_count));
}

double ChainStats::meanReverseIters() const {
  return ratioOrZero(static_cast<double>(reverse_iters_total),
                     static_cast<double>(reverse_attempts));
}

double ChainStats::forwardRejectedShare() const {
  return ratioOrZero(
      static_cast<double>(count(StepResult::RejectedProjection)),
      static_cast<double>(rejected()));
}

ManifoldSampler::ManifoldSampler(
    std::shared_ptr<const ConstraintSystem> system, SamplerParams params)
    : system_(std::move(system)),
      params_(params),
      // The normal matrix pattern is fixed across x; analyze it once at any
      // representative point (values are irrelevant).
      chol_(linalg::normalMatrix(
          system_->jacobian(Vector::Zero(system_->numVariables())))),
      xtol_(params.resolvedXtol(system_->numVariables())) {
  params_.validate();
}

ChainState ManifoldSampler::makeState(const Vector& x) {
  if (x.size() != system_->numVariables()) {
    throw std::invalid_argument("state dimension does not match the system");
  }
  double err = system_->constraintError(x);
  if (!(err < params_.tol)) {
    throw SingularStartError("initial point is off the manifold: |q|_inf = " +
                             std::to_string(err));
  }
  SparseMatrix Q = system_->jacobian(x);
  auto L = chol_.factorize(linalg::normalMatrix(Q));
  if (!L) {
    throw SingularStartError(
        "constraint Jacobian is rank-deficient at the initial point");
  }
  return {x, std::move(Q), std::move(*L), system_->logDensity(x)};
}

StepOutcome ManifoldSampler::step(ChainState& state, Rng& rng) {
  StepOutcome out;

  Vector noise(system_->numVariables());
  for (int i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  TangentStep v_x = tangentStep(state, params_.sigma, noise);

  ProjectionResult forward =
      project(state.x + v_x.v, state.Q, state.L, *system_, params_);
  out.forward_iters = forward.iters;
  if (!forward.success) {
    out.result = StepResult::RejectedProjection;
    return out;
  }

  SparseMatrix Q_y = system_->jacobian(forward.y);
  auto L_y = chol_.factorize(linalg::normalMatrix(Q_y));
  if (!L_y) {
    out.result = StepResult::RejectedSingular;
    return out;
  }
  double log_f_y = system_->logDensity(forward.y);
  ChainState proposal{std::move(forward.y), std::move(Q_y), std::move(*L_y),
                      log_f_y};

  TangentStep v_y = reverseTangent(state.x, proposal.x, proposal.Q,
                                   proposal.L);

  MetropolisRatio ratio =
      metropolisRatio(state, proposal, v_x, v_y, params_);
  out.acceptance_prob = ratio.acceptance_prob;
  if (rng.uniform() > ratio.acceptance_prob) {
    out.result = StepResult::RejectedMetropolis;
    return out;
  }

  if (!params_.skip_reverse_check) {
    ProjectionResult reverse = project(proposal.x + v_y.v, proposal.Q,
                                       proposal.L, *system_, params_);
    out.reverse_iters = reverse.iters;
    if (!reverse.success) {
      out.result = StepResult::RejectedReverseProjection;
      return out;
    }
    if ((reverse.y - state.x).lpNorm<Eigen::Infinity>() > xtol_) {
      out.result = StepResult::RejectedReverseMismatch;
      return out;
    }
  }

  // Accept: the proposal's Jacobian and factor carry over unrecomputed.
  state = std::move(proposal);
  out.result = StepResult::Accepted;
  return out;
}

ChainStats ManifoldSampler::run(ChainState& state, Rng& rng, long n_steps,
                                long thin, const StateRecorder& recorder) {
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  double err = system_->constraintError(state.x);
  if (!(err < params_.tol)) {
    throw SingularStartError("chain start is off the manifold: |q|_inf = " +
                             std::to_string(err));
  }
  ChainStats stats;
  for (long k = 1; k <= n_steps; ++k) {
    stats.record(step(state, rng));
    if (recorder && k % thin == 0) {
      recorder(k, state);
    }
  }
  return stats;
}

}  // namespace manifold
