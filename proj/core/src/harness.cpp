#include "manifold/harness.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "manifold/errors.hpp"

namespace manifold::harness {

namespace {
using Clock = std::chrono::steady_clock;

double seconds(Clock::duration d) {
  return std::chrono::duration<double>(d).count();
}
}  // namespace

double measureAcceptance(const BuiltSystem& bs, const SamplerParams& params,
                         Rng rng, long n_samples, long burn_in) {
  ManifoldSampler sampler(bs.system, params);
  ChainState state = sampler.makeState(bs.initial);
  sampler.run(state, rng, burn_in);
  ChainStats stats = sampler.run(state, rng, n_samples);
  return stats.acceptanceRate();
}

TuneResult tuneSigma(const BuiltSystem& bs, SamplerParams params,
                     double target_a, Rng& rng, const TuneOptions& opts) {
  if (!(target_a > 0.0 && target_a < 1.0)) {
    throw std::invalid_argument("target acceptance must lie in (0, 1)");
  }

  TuneResult result;
  result.target_a = target_a;
  result.samples_used = opts.n_samples;
  const double tolerance = opts.tolerance();

  std::uint64_t stream = 0;
  auto measure = [&](double sigma) {
    params.sigma = sigma;
    return measureAcceptance(bs, params, rng.fork(stream++), opts.n_samples,
                             opts.burn_in);
  };

  double sigma = opts.sigma_init;
  double a = measure(sigma);
  if (std::abs(a - target_a) < tolerance) {
    result.sigma_a = sigma;
    result.measured_a = a;
    return result;
  }

  // Expand geometrically until two step sizes straddle the target
  // (acceptance treated as decreasing in sigma).
  double lo = sigma, hi = sigma, a_lo = a, a_hi = a;
  while (a_hi >= target_a) {
    if (++result.expansions > opts.max_expansions) {
      throw BracketError("no step size found with acceptance below target");
    }
    lo = hi;
    a_lo = a_hi;
    hi *= 2.0;
    a_hi = measure(hi);
    if (std::abs(a_hi - target_a) < tolerance) {
      result.sigma_a = hi;
      result.measured_a = a_hi;
      return result;
    }
  }
  while (a_lo < target_a) {
    if (++result.expansions > opts.max_expansions) {
      throw BracketError("no step size found with acceptance above target");
    }
    hi = lo;
    a_hi = a_lo;
    lo /= 2.0;
    a_lo = measure(lo);
    if (std::abs(a_lo - target_a) < tolerance) {
      result.sigma_a = lo;
      result.measured_a = a_lo;
      return result;
    }
  }

  // Bisection in log sigma on fresh estimates.
  for (int it = 0; it < opts.max_bisection_iters; ++it) {
    double mid = std::sqrt(lo * hi);
    double a_mid = measure(mid);
    ++result.bisection_iters;
    if (std::abs(a_mid - target_a) < tolerance) {
      result.sigma_a = mid;
      result.measured_a = a_mid;
      return result;
    }
    if (a_mid > a_lo || a_mid < a_hi) {
      ++result.nonmonotone_warnings;  // Monte Carlo noise inverted estimates
    }
    if (a_mid > target_a) {
      lo = mid;
      a_lo = a_mid;
    } else {
      hi = mid;
      a_hi = a_mid;
    }
  }
  throw BracketError("bisection failed to reach the target acceptance");
}

ChainStats collectStats(const BuiltSystem& bs, const SamplerParams& params,
                        Rng rng, long n_steps, long burn_in) {
  ManifoldSampler sampler(bs.system, params);
  ChainState state = sampler.makeState(bs.initial);
  sampler.run(state, rng, burn_in);
  return sampler.run(state, rng, n_steps);
}

namespace {

/// Symmetric value in [-1, 1] derived from the entry position, so both
/// triangles of the random filling agree without bookkeeping.
double symmetricFill(std::uint64_t salt, int i, int j) {
  std::uint64_t key = salt ^ (static_cast<std::uint64_t>(std::min(i, j)) << 32 |
                              static_cast<std::uint64_t>(std::max(i, j)));
  std::uint64_t h = Rng::splitmix64(key);
  return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

/// Random matrix with the pattern of `pattern`, strictly diagonally
/// dominant (hence SPD, since the pattern is symmetric).
SparseMatrix randomFilling(const SparseMatrix& pattern, std::uint64_t salt) {
  SparseMatrix A = pattern;
  Vector offdiag_abs = Vector::Zero(A.rows());
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      if (it.row() != it.col()) {
        double v = symmetricFill(salt, static_cast<int>(it.row()), col);
        it.valueRef() = v;
        offdiag_abs[it.row()] += std::abs(v);
      }
    }
  }
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      if (it.row() == it.col()) {
        it.valueRef() = offdiag_abs[it.row()] + 1.0;
      }
    }
  }
  return A;
}

}  // namespace

FactorizationTiming benchmarkFactorizations(const BuiltSystem& bs, Rng rng,
                                            long n_reps, int fillings) {
  if (fillings < 1) throw std::invalid_argument("fillings must be >= 1");
  SparseMatrix pattern =
      linalg::normalMatrix(bs.system->jacobian(bs.initial));

  FactorizationTiming timing;
  timing.fillings = fillings;
  timing.reps = n_reps;

  double chol_min = 0.0, chol_max = 0.0, lu_min = 0.0, lu_max = 0.0;
  double sink = 0.0;
  for (int f = 0; f < fillings; ++f) {
    SparseMatrix A = randomFilling(pattern, rng.nextU64());

    linalg::CholeskySolver solver(A);
    auto t0 = Clock::now();
    for (long rep = 0; rep < n_reps; ++rep) {
      auto factor = solver.factorize(A);
      sink += factor ? factor->diagonal()[0] : 0.0;
    }
    double t_chol = seconds(Clock::now() - t0) / static_cast<double>(n_reps);

    t0 = Clock::now();
    for (long rep = 0; rep < n_reps; ++rep) {
      auto factor = linalg::lu(A);
      sink += factor ? factor->rowsPermutation().indices()[0] : 0.0;
    }
    double t_lu = seconds(Clock::now() - t0) / static_cast<double>(n_reps);

    timing.t_chol += t_chol;
    timing.t_lu += t_lu;
    chol_min = f == 0 ? t_chol : std::min(chol_min, t_chol);
    chol_max = f == 0 ? t_chol : std::max(chol_max, t_chol);
    lu_min = f == 0 ? t_lu : std::min(lu_min, t_lu);
    lu_max = f == 0 ? t_lu : std::max(lu_max, t_lu);
  }
  if (!std::isfinite(sink)) throw std::runtime_error("benchmark overflow");

  timing.t_chol /= fillings;
  timing.t_lu /= fillings;
  timing.chol_spread = (chol_max - chol_min) / timing.t_chol;
  timing.lu_spread = (lu_max - lu_min) / timing.t_lu;
  return timing;
}

TimingEstimate timingEstimate(const ChainStats& stats, double t_chol,
                              double t_lu, double a) {
  TimingEstimate est;
  est.t_chol = t_chol;
  est.t_lu = t_lu;
  est.n_iter_mean = stats.meanForwardIters();
  est.r_forward = stats.forwardRejectedShare();
  est.a = a;
  double chol_share = 1.0 - (1.0 - a) * est.r_forward;
  est.est_symmetric = chol_share * t_chol;
  est.est_traditional =
      (1.0 + a) * est.n_iter_mean * t_lu + chol_share * t_chol;
  return est;
}

TimedRun measureStepTime(const BuiltSystem& bs, const SamplerParams& params,
                         Rng rng, long n_steps, long warmup) {
  ManifoldSampler sampler(bs.system, params);
  ChainState state = sampler.makeState(bs.initial);
  sampler.run(state, rng, warmup);
  auto t0 = Clock::now();
  ChainStats stats = sampler.run(state, rng, n_steps);
  double elapsed = seconds(Clock::now() - t0);
  return {elapsed / static_cast<double>(n_steps), stats.acceptanceRate(),
          n_steps};
}

DiffusivityScan diffusivityScan(const BuiltSystem& bs, SamplerParams params,
                                const std::vector<double>& targets, Rng& rng,
                                long n_steps, const TuneOptions& tune_opts) {
  DiffusivityScan scan;
  std::uint64_t stream = 1u << 20;  // clear of the tuner's fork streams
  for (double target : targets) {
    TuneResult tuned;
    try {
      tuned = tuneSigma(bs, params, target, rng, tune_opts);
    } catch (const BracketError& e) {
      scan.warnings.push_back("target " + std::to_string(target) +
                              " skipped: " + e.what());
      continue;
    }
    params.sigma = tuned.sigma_a;
    TimedRun timed =
        measureStepTime(bs, params, rng.fork(stream++), n_steps);
    DiffusivityPoint point;
    point.a = timed.acceptance;
    point.sigma_a = tuned.sigma_a;
    point.mean_step_time = timed.mean_step_time;
    point.d_eff = point.a * point.sigma_a * point.sigma_a /
                  point.mean_step_time;
    scan.points.push_back(point);
  }
  return scan;
}

}  // namespace manifold::harness
