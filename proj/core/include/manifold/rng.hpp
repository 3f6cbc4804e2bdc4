#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace manifold {

/// Seedable random generator with explicit transforms, so that a given seed
/// produces the same stream regardless of the standard library in use.
/// Uniforms come straight from the 64-bit Mersenne Twister; normals use the
/// Box-Muller transform.
///
/// Stream splitting: `fork(k)` derives an independent child generator from
/// the *seed* (not the current state), as
///   child_seed = splitmix64(seed ^ splitmix64(k + 1)),
/// so the set of child streams is reproducible no matter how much the parent
/// has been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t nextU64() { return gen_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

  /// Standard normal deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((nextU64() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer on [0, bound), bound >= 1. Rejection-sampled to avoid
  /// modulo bias.
  std::uint64_t uniformInt(std::uint64_t bound) {
    const std::uint64_t limit = (UINT64_MAX / bound) * bound;
    std::uint64_t draw;
    do {
      draw = nextU64();
    } while (draw >= limit);
    return draw % bound;
  }

  /// Independent child stream number `stream`; see class comment.
  Rng fork(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 1)));
  }

  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace manifold
