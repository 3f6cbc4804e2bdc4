#include "manifold/verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "manifold/sampler.hpp"
#include "manifold/systems.hpp"

namespace manifold::verification {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr long kBurnIn = 10000;

/// Runs a chain and bins every thin-th state.
std::vector<long> sampleHistogram(const BuiltSystem& bs,
                                  const SamplerParams& params, long n_steps,
                                  long thin, std::uint64_t seed,
                                  const std::function<int(const Vector&)>& bin,
                                  long& samples_out) {
  ManifoldSampler sampler(bs.system, params);
  Rng rng(seed);
  ChainState state = sampler.makeState(bs.initial);
  sampler.run(state, rng, kBurnIn);
  std::vector<long> counts(kBins, 0);
  long samples = 0;
  sampler.run(state, rng, n_steps, thin,
              [&](long, const ChainState& s) {
                int k = std::clamp(bin(s.x), 0, kBins - 1);
                ++counts[k];
                ++samples;
              });
  samples_out = samples;
  return counts;
}

double chiSquare(const std::vector<long>& counts,
                 const std::vector<double>& probs, long samples) {
  double stat = 0.0;
  for (int k = 0; k < kBins; ++k) {
    double expected = probs[k] * static_cast<double>(samples);
    double diff = static_cast<double>(counts[k]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

HistogramCheck makeCheck(std::string name, const std::vector<long>& counts,
                         const std::vector<double>& probs, long samples) {
  HistogramCheck check;
  check.name = std::move(name);
  check.chi_square = chiSquare(counts, probs, samples);
  check.dof = kBins - 1;
  check.critical = kChi2Critical35;
  check.pass = check.chi_square < check.critical;
  check.samples = samples;
  return check;
}

}  // namespace

HistogramCheck circleUniformAngle(long n_steps, double sigma,
                                  std::uint64_t seed, long thin) {
  BuiltSystem bs = systems::buildCircle();
  SamplerParams params;
  params.sigma = sigma;
  params.use_pseudodet = false;

  auto bin = [](const Vector& x) {
    double angle = std::atan2(x[1], x[0]);  // [-pi, pi)
    return static_cast<int>((angle + std::numbers::pi) / kTwoPi * kBins);
  };
  long samples = 0;
  auto counts = sampleHistogram(bs, params, n_steps, thin, seed, bin, samples);
  std::vector<double> probs(kBins, 1.0 / kBins);
  return makeCheck("circle angle vs uniform (hard)", counts, probs, samples);
}

HistogramCheck ellipseArclengthSoft(double a, double b, bool use_pseudodet,
                                    long n_steps, double sigma,
                                    std::uint64_t seed, long thin) {
  BuiltSystem bs = systems::buildEllipse(a, b);
  SamplerParams params;
  params.sigma = sigma;
  params.use_pseudodet = use_pseudodet;

  // Quadrature oracle on the parametrization x = (a cos t, b sin t).
  // ds/dt = sqrt(a^2 sin^2 t + b^2 cos^2 t); |Q| = 2 sqrt(cos^2 t / a^2 +
  // sin^2 t / b^2). Soft measure: mass ∝ ds / |Q|.
  auto speed = [&](double t) {
    double st = std::sin(t), ct = std::cos(t);
    return std::hypot(a * st, b * ct);
  };
  auto gradNorm = [&](double t) {
    double st = std::sin(t), ct = std::cos(t);
    return 2.0 * std::hypot(ct / a, st / b);
  };

  // Find bin boundaries in t that slice the circumference into equal
  // arclength, from a cumulative fine-grid quadrature.
  constexpr int kGrid = 10000;
  const double dt = kTwoPi / kGrid;
  std::vector<double> cumulative(kGrid + 1, 0.0);
  for (int i = 0; i < kGrid; ++i) {
    cumulative[i + 1] = cumulative[i] + speed((i + 0.5) * dt) * dt;
  }
  const double total = cumulative[kGrid];
  std::vector<double> t_bounds(kBins + 1, 0.0);
  t_bounds[kBins] = kTwoPi;
  for (int k = 1; k < kBins; ++k) {
    double target = total * k / kBins;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target);
    int i = static_cast<int>(it - cumulative.begin()) - 1;
    double frac = (target - cumulative[i]) /
                  (cumulative[i + 1] - cumulative[i]);
    t_bounds[k] = (i + frac) * dt;
  }

  // Expected soft-measure mass per arclength bin.
  std::vector<double> probs(kBins, 0.0);
  double norm = 0.0;
  constexpr int kSub = 300;
  for (int k = 0; k < kBins; ++k) {
    double lo = t_bounds[k], width = t_bounds[k + 1] - t_bounds[k];
    double mass = 0.0;
    for (int j = 0; j < kSub; ++j) {
      double t = lo + (j + 0.5) * width / kSub;
      mass += speed(t) / gradNorm(t);
    }
    probs[k] = mass * width / kSub;
    norm += probs[k];
  }
  for (double& p : probs) p /= norm;

  auto bin = [&](const Vector& x) {
    double t = std::atan2(x[1] / b, x[0] / a);
    if (t < 0) t += kTwoPi;
    auto it = std::upper_bound(t_bounds.begin(), t_bounds.end(), t);
    return static_cast<int>(it - t_bounds.begin()) - 1;
  };
  long samples = 0;
  auto counts = sampleHistogram(bs, params, n_steps, thin, seed, bin, samples);

  HistogramCheck check = makeCheck(
      use_pseudodet ? "ellipse arclength vs 1/|Q| density (soft)"
                    : "ellipse hard constraints diverge from soft oracle",
      counts, probs, samples);
  if (!use_pseudodet) {
    // The surface measure differs from the soft one; the comparison is
    // expected to fail decisively.
    check.pass = check.chi_square >= check.critical;
  }
  return check;
}

HistogramCheck torusPoloidalAngle(double R, double r, long n_steps,
                                  double sigma, std::uint64_t seed,
                                  long thin) {
  BuiltSystem bs = systems::buildTorus(R, r);
  SamplerParams params;
  params.sigma = sigma;
  params.use_pseudodet = false;

  // Surface-measure marginal of the poloidal angle is ∝ R + r cos(theta);
  // integrate it over each bin by quadrature.
  std::vector<double> probs(kBins, 0.0);
  double norm = 0.0;
  constexpr int kSub = 300;
  const double width = kTwoPi / kBins;
  for (int k = 0; k < kBins; ++k) {
    double lo = -std::numbers::pi + k * width;
    double mass = 0.0;
    for (int j = 0; j < kSub; ++j) {
      mass += R + r * std::cos(lo + (j + 0.5) * width / kSub);
    }
    probs[k] = mass * width / kSub;
    norm += probs[k];
  }
  for (double& p : probs) p /= norm;

  auto bin = [&](const Vector& x) {
    double rho = std::hypot(x[0], x[1]);
    double theta = std::atan2(x[2], rho - R);  // [-pi, pi)
    return static_cast<int>((theta + std::numbers::pi) / kTwoPi * kBins);
  };
  long samples = 0;
  auto counts = sampleHistogram(bs, params, n_steps, thin, seed, bin, samples);
  return makeCheck("torus poloidal angle vs R + r cos (hard)", counts, probs,
                   samples);
}

std::vector<HistogramCheck> verificationSuite(long n_steps,
                                              std::uint64_t seed) {
  Rng streams(seed);
  std::vector<HistogramCheck> checks;
  checks.push_back(
      circleUniformAngle(n_steps, 0.5, streams.fork(1).seed()));
  checks.push_back(ellipseArclengthSoft(2.0, 1.0, true, n_steps, 0.4,
                                        streams.fork(2).seed()));
  checks.push_back(ellipseArclengthSoft(2.0, 1.0, false, n_steps, 0.4,
                                        streams.fork(3).seed()));
  checks.push_back(
      torusPoloidalAngle(1.0, 0.5, n_steps, 0.45, streams.fork(4).seed()));
  return checks;
}

}  // namespace manifold::verification
