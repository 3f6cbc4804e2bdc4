#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace manifold::verification {

inline constexpr int kBins = 36;

/// 0.1% upper-tail quantile of chi-square with 35 degrees of freedom.
inline constexpr double kChi2Critical35 = 66.618829;

struct HistogramCheck {
  std::string name;
  double chi_square = 0.0;
  int dof = 0;
  double critical = 0.0;
  bool pass = false;
  long samples = 0;
};

/// Circle sampled with hard constraints: the angle marginal must be uniform.
/// Chain of n_steps at the given sigma, recorded every `thin` steps so the
/// histogram sees effectively independent draws; chi-square against the
/// uniform law over 36 bins at 0.1% significance.
HistogramCheck circleUniformAngle(long n_steps, double sigma,
                                  std::uint64_t seed, long thin = 100);

/// Ellipse x^2/a^2 + y^2/b^2 = 1 binned by arclength against the
/// soft-constraint density (proportional to 1/|Q|, by quadrature). With
/// use_pseudodet=true the histogram must match; with false the chain samples
/// the surface measure instead and the same comparison must fail, so `pass`
/// reports chi_square >= critical in that case.
HistogramCheck ellipseArclengthSoft(double a, double b, bool use_pseudodet,
                                    long n_steps, double sigma,
                                    std::uint64_t seed, long thin = 100);

/// Torus with hard constraints: poloidal-angle marginal proportional to
/// R + r cos(theta), by quadrature.
HistogramCheck torusPoloidalAngle(double R, double r, long n_steps,
                                  double sigma, std::uint64_t seed,
                                  long thin = 100);

/// The full analytic-manifold suite (circle, ellipse soft, ellipse
/// hard-divergence, torus).
std::vector<HistogramCheck> verificationSuite(long n_steps,
                                              std::uint64_t seed);

}  // namespace manifold::verification
