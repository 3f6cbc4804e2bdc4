#pragma once

#include <string>
#include <vector>

#include "manifold/sampler.hpp"

namespace manifold::harness {

struct TuneOptions {
  long n_samples = 100000;  // chain length per acceptance estimate
  long burn_in = 10000;     // discarded before each estimate
  double sigma_init = 1.0;
  int max_expansions = 60;
  int max_bisection_iters = 200;

  /// An estimate within this distance of the target ends the search.
  double tolerance() const { return 1.25 / std::sqrt(double(n_samples)); }
};

struct TuneResult {
  double sigma_a = 0.0;     // tuned step size
  double measured_a = 0.0;  // acceptance measured at sigma_a
  double target_a = 0.0;
  long samples_used = 0;
  int bisection_iters = 0;
  int expansions = 0;
  int nonmonotone_warnings = 0;  // estimate inversions seen during bisection
};

/// Acceptance fraction of a fresh chain from bs.initial: burn_in discarded
/// steps, then n_samples measured ones.
double measureAcceptance(const BuiltSystem& bs, const SamplerParams& params,
                         Rng rng, long n_samples, long burn_in);

/// Finds sigma achieving the target acceptance ratio: geometric expansion
/// (x2 / /2) until two step sizes straddle the target, then bisection in
/// log sigma, treating acceptance as monotone decreasing in sigma. Estimate
/// inversions caused by Monte Carlo noise are counted, not fatal. Returns
/// once an estimate lands within 1.25/sqrt(n_samples) of the target.
/// Throws BracketError when no bracket emerges (degenerate system).
TuneResult tuneSigma(const BuiltSystem& bs, SamplerParams params,
                     double target_a, Rng& rng, const TuneOptions& opts = {});

/// Rejection-reason and iteration statistics at a fixed (tuned) sigma.
ChainStats collectStats(const BuiltSystem& bs, const SamplerParams& params,
                        Rng rng, long n_steps, long burn_in = 10000);

struct FactorizationTiming {
  double t_chol = 0.0;  // seconds per factorization, mean over fillings
  double t_lu = 0.0;
  double chol_spread = 0.0;  // (max - min) / mean across fillings
  double lu_spread = 0.0;
  int fillings = 0;
  long reps = 0;
};

/// Times factorizations of matrices with the exact sparsity pattern of
/// Q^T Q at bs.initial, refilled with random diagonally dominant values so
/// that the Cholesky case is SPD. The Cholesky timing reuses one symbolic
/// analysis, the LU timing re-runs the full factorization, matching what a
/// chain step pays for each. Runs single-threaded.
FactorizationTiming benchmarkFactorizations(const BuiltSystem& bs, Rng rng,
                                            long n_reps = 10000,
                                            int fillings = 3);

struct TimingEstimate {
  double t_chol = 0.0;
  double t_lu = 0.0;
  double n_iter_mean = 0.0;
  double r_forward = 0.0;  // forward-projection share of rejections
  double a = 0.0;
  double est_symmetric = 0.0;
  double est_traditional = 0.0;
};

/// Factorization-count cost model at acceptance ratio a:
///   est_symmetric   = (1 - (1-a) r) t_chol
///   est_traditional = (1+a) n_iter t_lu + (1 - (1-a) r) t_chol
/// At a = 0.25 the coefficients reduce to 0.75 and 1.25.
TimingEstimate timingEstimate(const ChainStats& stats, double t_chol,
                              double t_lu, double a);

struct TimedRun {
  double mean_step_time = 0.0;  // seconds, monotonic clock
  double acceptance = 0.0;
  long steps = 0;
};

/// Mean wall time per step at fixed parameters; `warmup` steps are excluded.
TimedRun measureStepTime(const BuiltSystem& bs, const SamplerParams& params,
                         Rng rng, long n_steps, long warmup = 1000);

struct DiffusivityPoint {
  double a = 0.0;           // acceptance measured during the timed run
  double sigma_a = 0.0;     // step size tuned for this target
  double mean_step_time = 0.0;
  double d_eff = 0.0;       // a * sigma_a^2 / mean_step_time
};

struct DiffusivityScan {
  std::vector<DiffusivityPoint> points;
  std::vector<std::string> warnings;  // targets skipped on BracketError
};

/// Tunes sigma for each target acceptance ratio, then measures the mean
/// step time and emits the effective diffusivity a sigma^2 / T. Targets
/// whose tuning fails to bracket are skipped with a warning.
DiffusivityScan diffusivityScan(const BuiltSystem& bs, SamplerParams params,
                                const std::vector<double>& targets, Rng& rng,
                                long n_steps,
                                const TuneOptions& tune_opts = {});

}  // namespace manifold::harness
