#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>

#include "manifold/constraint_system.hpp"
#include "manifold/linalg.hpp"
#include "manifold/rng.hpp"

namespace manifold {

enum class NewtonVariant {
  Symmetric,    // quasi-Newton with the fixed base-point normal matrix;
                // reuses one Cholesky factor for every iteration
  Traditional,  // exact Jacobian; a fresh LU factorization per iteration
};

const char* toString(NewtonVariant v);

struct SamplerParams {
  double sigma = 1.0;    // tangent step scale
  double tol = 1e-5;     // projection tolerance on |q|_inf
  double eta = 0.95;     // required per-iteration error contraction
  int max_iter = 100;    // projection iteration cap
  double xtol = 0.0;     // reverse-match tolerance; 0 = tol * n_vars * 10
  NewtonVariant newton_variant = NewtonVariant::Symmetric;
  bool use_pseudodet = true;  // include the |Q|^{-1} measure factor
                              // (soft constraints); false = hard constraints
  bool skip_reverse_check = false;  // biases the sampled measure; for
                                    // experiments only

  double resolvedXtol(int n_vars) const {
    return xtol > 0.0 ? xtol : tol * n_vars * 10.0;
  }

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// A point of the chain with everything the kernel reuses: the Jacobian at
/// x, the Cholesky factor of Q^T Q, and log f(x). Invariant: |q(x)|_inf is
/// below the projection tolerance and L factors Q^T Q at this exact x.
struct ChainState {
  Vector x;
  SparseMatrix Q;
  linalg::CholeskyFactor L;
  double log_f = 0.0;
};

/// Tangent-space move: v orthogonal to the columns of the Jacobian.
struct TangentStep {
  Vector v;
  double norm_sq = 0.0;
};

enum class StepResult {
  Accepted = 0,
  RejectedProjection,         // forward projection did not converge
  RejectedMetropolis,         // uniform draw exceeded the acceptance ratio
  RejectedReverseProjection,  // reverse projection did not converge
  RejectedReverseMismatch,    // reverse projection converged elsewhere
  RejectedSingular,           // proposal's normal matrix was not factorizable
};
inline constexpr int kStepResultCount = 6;

const char* toString(StepResult r);

struct StepOutcome {
  StepResult result = StepResult::Accepted;
  int forward_iters = 0;  // constraint evaluations in the forward projection
  int reverse_iters = 0;  // same for the reverse projection; 0 if not reached
  std::optional<double> acceptance_prob;  // set once Metropolis was reached
};

struct ProjectionResult {
  Vector y;        // final iterate, on the manifold iff success
  Vector coeffs;   // normal coefficients a with y = z0 + Q a
  int iters = 0;   // constraint evaluations
  bool success = false;
};

/// Newton projection onto the manifold: solve q(z0 + Q a) = 0 for a, from
/// a = 0. Stops on (i) |q|_inf < tol (success), (ii) error shrinking slower
/// than eta per iteration (failure), or (iii) the iteration cap (failure).
ProjectionResult projectSymmetric(const Vector& z0, const SparseMatrix& Q,
                                  const linalg::CholeskyFactor& L,
                                  const ConstraintSystem& system,
                                  const SamplerParams& params);
ProjectionResult projectTraditional(const Vector& z0, const SparseMatrix& Q,
                                    const ConstraintSystem& system,
                                    const SamplerParams& params);
ProjectionResult project(const Vector& z0, const SparseMatrix& Q,
                         const linalg::CholeskyFactor& L,
                         const ConstraintSystem& system,
                         const SamplerParams& params);

/// sigma * (projection of `noise` onto the tangent space at state.x).
TangentStep tangentStep(const ChainState& state, double sigma,
                        const Vector& noise);

/// Tangent component at y of the displacement back to x.
TangentStep reverseTangent(const Vector& x, const Vector& y,
                           const SparseMatrix& Q_y,
                           const linalg::CholeskyFactor& L_y);

struct MetropolisRatio {
  double log_ratio;
  double acceptance_prob;  // min(1, exp(log_ratio))
};

/// Acceptance ratio of the move from -> to. The determinant part is the
/// product of per-entry ratios diag(L_from)_i / diag(L_to)_i, which stays
/// O(1) entrywise and cannot underflow the way a ratio of full determinant
/// products can.
MetropolisRatio metropolisRatio(const ChainState& from, const ChainState& to,
                                const TangentStep& v_from,
                                const TangentStep& v_to,
                                const SamplerParams& params);

/// Aggregated per-chain counters.
struct ChainStats {
  long n_steps = 0;
  std::array<long, kStepResultCount> by_result{};

  long forward_iters_total = 0;
  long forward_iters_on_success = 0;  // forward projection converged
  long forward_iters_on_fail = 0;
  long forward_success_count = 0;
  long forward_fail_count = 0;
  long reverse_iters_total = 0;
  long reverse_attempts = 0;

  void record(const StepOutcome& outcome);

  long accepted() const {
    return by_result[static_cast<int>(StepResult::Accepted)];
  }
  long count(StepResult r) const { return by_result[static_cast<int>(r)]; }
  long rejected() const { return n_steps - accepted(); }

  double acceptanceRate() const;
  double rejectionFraction(StepResult r) const;  // count / n_steps
  double meanForwardIters() const;
  double meanForwardItersOnSuccess() const;
  double meanForwardItersOnFail() const;
  double meanReverseIters() const;

  /// Share of forward-projection failures among all rejections; the `r`
  /// of the factorization cost model. 0 when nothing was rejected.
  double forwardRejectedShare() const;
};

using StateRecorder = std::function<void(long step, const ChainState&)>;

/// The Markov chain kernel. Holds the constraint system, the parameters and
/// one symbolic Cholesky analysis pinned for the whole chain, so that every
/// factor along the chain uses the same fill-reducing permutation and the
/// diagonal ratio in the acceptance probability pairs entries consistently.
///
/// step() mutates internal solver scratch: use one sampler per chain. The
/// chain itself is strictly sequential; independent chains over the same
/// (stateless) system may run concurrently, each with its own sampler.
class ManifoldSampler {
 public:
  ManifoldSampler(std::shared_ptr<const ConstraintSystem> system,
                  SamplerParams params);

  /// Builds a chain state at x. Throws SingularStartError if x is off the
  /// manifold (|q|_inf >= tol) or its normal matrix cannot be factorized.
  ChainState makeState(const Vector& x);

  /// One transition of the chain. On any rejection `state` is untouched.
  StepOutcome step(ChainState& state, Rng& rng);

  /// n_steps transitions; streams every thin-th state to `recorder`.
  /// Throws SingularStartError if the initial state is off the manifold.
  ChainStats run(ChainState& state, Rng& rng, long n_steps, long thin = 1,
                 const StateRecorder& recorder = {});

  const SamplerParams& params() const { return params_; }
  const ConstraintSystem& system() const { return *system_; }

 private:
  std::shared_ptr<const ConstraintSystem> system_;
  SamplerParams params_;
  linalg::CholeskySolver chol_;
  double xtol_;
};

}  // namespace manifold
