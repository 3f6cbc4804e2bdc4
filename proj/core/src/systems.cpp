#include "manifold/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "manifold/errors.hpp"
#include "manifold/rng.hpp"

namespace manifold::systems {
namespace {

/// Distance-bar system: q_k = |p_a - p_b|^2 - rest_sq_k, where each endpoint
/// is either a free vertex or a fixed anchor.
class BarFramework : public ConstraintSystem {
 public:
  struct Bar {
    int a;  // free vertex index
    int b;  // free vertex index, or -(anchor_index+1)
    double rest_sq;
  };

  BarFramework(std::string name, int dim, int n_vertices, std::vector<Bar> bars,
               std::vector<Vector> anchors)
      : ConstraintSystem(dim * n_vertices, static_cast<int>(bars.size()),
                         std::move(name)),
        dim_(dim),
        bars_(std::move(bars)),
        anchors_(std::move(anchors)) {}

  void evalConstraints(const Vector& x, Vector& q_out) const override {
    for (std::size_t k = 0; k < bars_.size(); ++k) {
      q_out[static_cast<int>(k)] =
          barVector(x, bars_[k]).squaredNorm() - bars_[k].rest_sq;
    }
  }

  void evalJacobian(const Vector& x, SparseMatrix& Q_out) const override {
    std::vector<Triplet> triplets;
    triplets.reserve(bars_.size() * 2 * dim_);
    for (std::size_t k = 0; k < bars_.size(); ++k) {
      const Bar& bar = bars_[k];
      const int col = static_cast<int>(k);
      Vector d = barVector(x, bar);
      for (int c = 0; c < dim_; ++c) {
        triplets.emplace_back(dim_ * bar.a + c, col, 2.0 * d[c]);
      }
      if (bar.b >= 0) {
        for (int c = 0; c < dim_; ++c) {
          triplets.emplace_back(dim_ * bar.b + c, col, -2.0 * d[c]);
        }
      }
    }
    Q_out.setFromTriplets(triplets.begin(), triplets.end());
  }

 protected:
  Vector position(const Vector& x, int v) const {
    if (v >= 0) return x.segment(dim_ * v, dim_);
    return anchors_[static_cast<std::size_t>(-v - 1)];
  }

  Vector barVector(const Vector& x, const Bar& bar) const {
    return position(x, bar.a) - position(x, bar.b);
  }

  int dim_;
  std::vector<Bar> bars_;
  std::vector<Vector> anchors_;
};

/// Square lattice with the diagonal-spring energy that keeps it from
/// collapsing onto itself.
class LatticeSystem : public BarFramework {
 public:
  static constexpr double kStiffness = 5.0;

  LatticeSystem(int s, std::vector<Bar> bars,
                std::vector<std::pair<int, int>> diagonals, double target)
      : BarFramework("lattice", 2, s * s, std::move(bars), {}),
        diagonals_(std::move(diagonals)),
        target_(target) {}

  double logDensity(const Vector& x) const override {
    double sum = 0.0;
    for (const auto& [a, b] : diagonals_) {
      double len = (x.segment(2 * a, 2) - x.segment(2 * b, 2)).norm();
      double dev = len - target_;
      sum += dev * dev;
    }
    return -kStiffness * sum;
  }

 private:
  std::vector<std::pair<int, int>> diagonals_;
  double target_;
};

/// SO(s) flattened row-major: x[i*s + j] = A(i, j). Constraints are the row
/// dot products A_i . A_j - delta_ij for i <= j, ordered lexicographically.
class OrthogonalGroupSystem : public ConstraintSystem {
 public:
  explicit OrthogonalGroupSystem(int s)
      : ConstraintSystem(s * s, s * (s + 1) / 2, "matrix"), s_(s) {}

  void evalConstraints(const Vector& x, Vector& q_out) const override {
    int k = 0;
    for (int i = 0; i < s_; ++i) {
      for (int j = i; j < s_; ++j) {
        double dot = 0.0;
        for (int l = 0; l < s_; ++l) dot += x[i * s_ + l] * x[j * s_ + l];
        q_out[k++] = dot - (i == j ? 1.0 : 0.0);
      }
    }
  }

  void evalJacobian(const Vector& x, SparseMatrix& Q_out) const override {
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(numConstraints()) * 2 * s_);
    int k = 0;
    for (int i = 0; i < s_; ++i) {
      for (int j = i; j < s_; ++j) {
        if (i == j) {
          for (int l = 0; l < s_; ++l) {
            triplets.emplace_back(i * s_ + l, k, 2.0 * x[i * s_ + l]);
          }
        } else {
          for (int l = 0; l < s_; ++l) {
            triplets.emplace_back(i * s_ + l, k, x[j * s_ + l]);
            triplets.emplace_back(j * s_ + l, k, x[i * s_ + l]);
          }
        }
        ++k;
      }
    }
    Q_out.setFromTriplets(triplets.begin(), triplets.end());
  }

 private:
  int s_;
};

/// |x|^2 = 1 in R^dim.
class HypersphereSystem : public ConstraintSystem {
 public:
  HypersphereSystem(int dim, std::string name)
      : ConstraintSystem(dim, 1, std::move(name)) {}

  void evalConstraints(const Vector& x, Vector& q_out) const override {
    q_out[0] = x.squaredNorm() - 1.0;
  }

  void evalJacobian(const Vector& x, SparseMatrix& Q_out) const override {
    std::vector<Triplet> triplets;
    for (int i = 0; i < numVariables(); ++i) {
      triplets.emplace_back(i, 0, 2.0 * x[i]);
    }
    Q_out.setFromTriplets(triplets.begin(), triplets.end());
  }
};

class EllipseSystem : public ConstraintSystem {
 public:
  EllipseSystem(double a, double b)
      : ConstraintSystem(2, 1, "ellipse"), a_(a), b_(b) {}

  void evalConstraints(const Vector& x, Vector& q_out) const override {
    q_out[0] = x[0] * x[0] / (a_ * a_) + x[1] * x[1] / (b_ * b_) - 1.0;
  }

  void evalJacobian(const Vector& x, SparseMatrix& Q_out) const override {
    std::vector<Triplet> triplets{{0, 0, 2.0 * x[0] / (a_ * a_)},
                                  {1, 0, 2.0 * x[1] / (b_ * b_)}};
    Q_out.setFromTriplets(triplets.begin(), triplets.end());
  }

 private:
  double a_, b_;
};

class TorusSystem : public ConstraintSystem {
 public:
  TorusSystem(double R, double r)
      : ConstraintSystem(3, 1, "torus"), R_(R), r_(r) {}

  void evalConstraints(const Vector& x, Vector& q_out) const override {
    double rho = std::hypot(x[0], x[1]);
    double dr = rho - R_;
    q_out[0] = dr * dr + x[2] * x[2] - r_ * r_;
  }

  void evalJacobian(const Vector& x, SparseMatrix& Q_out) const override {
    double rho = std::hypot(x[0], x[1]);
    double scale = 2.0 * (rho - R_) / rho;
    std::vector<Triplet> triplets{{0, 0, scale * x[0]},
                                  {1, 0, scale * x[1]},
                                  {2, 0, 2.0 * x[2]}};
    Q_out.setFromTriplets(triplets.begin(), triplets.end());
  }

 private:
  double R_, r_;
};

}  // namespace

BuiltSystem buildPolymer(int n) {
  if (n < 2) throw std::invalid_argument("polymer: n must be >= 2");

  std::vector<BarFramework::Bar> bars;
  bars.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k + 1 < n; ++k) bars.push_back({k, k + 1, 1.0});
  bars.push_back({0, -1, 1.0});      // first vertex to anchor a0
  bars.push_back({n - 1, -2, 1.0});  // last vertex to anchor a1

  Vector a0 = Vector::Zero(3);
  Vector a1 = Vector::Zero(3);
  a1[0] = n / 2.0;

  // Planar zig-zag with exact unit bonds from a0 to a1. The n+1 bonds share
  // an x-advance dx and alternate the y-component between +h and -h with
  // h = sqrt(1 - dx^2); an odd number of bonds gets one straight unit bond
  // first so the remaining count is even and the y-walk closes.
  Vector x0(3 * n);
  int bonds = n + 1;
  double span = n / 2.0;
  Vector pos = a0;
  int k = 0;
  auto place = [&](double bx, double by) {
    pos[0] += bx;
    pos[1] += by;
    if (k < n) x0.segment(3 * k, 3) = pos;
    ++k;
  };
  if (bonds % 2 == 1) {
    place(1.0, 0.0);
    span -= 1.0;
    bonds -= 1;
  }
  double dx = span / bonds;
  double h = std::sqrt(1.0 - dx * dx);
  for (int b = 0; b < bonds; ++b) {
    place(dx, b % 2 == 0 ? h : -h);
  }

  auto system = std::make_shared<BarFramework>(
      "polymer", 3, n, std::move(bars), std::vector<Vector>{a0, a1});
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildLattice(int s, LatticeTarget target) {
  if (s < 2) throw std::invalid_argument("lattice: s must be >= 2");

  auto idx = [s](int ix, int iy) { return iy * s + ix; };

  std::vector<BarFramework::Bar> bars;
  bars.reserve(static_cast<std::size_t>(2 * s * (s - 1)));
  for (int iy = 0; iy < s; ++iy) {
    for (int ix = 0; ix + 1 < s; ++ix) {
      bars.push_back({idx(ix, iy), idx(ix + 1, iy), 1.0});
    }
  }
  for (int iy = 0; iy + 1 < s; ++iy) {
    for (int ix = 0; ix < s; ++ix) {
      bars.push_back({idx(ix, iy), idx(ix, iy + 1), 1.0});
    }
  }

  std::vector<std::pair<int, int>> diagonals;
  diagonals.reserve(static_cast<std::size_t>(2 * (s - 1) * (s - 1)));
  for (int iy = 0; iy + 1 < s; ++iy) {
    for (int ix = 0; ix + 1 < s; ++ix) {
      diagonals.emplace_back(idx(ix, iy), idx(ix + 1, iy + 1));
      diagonals.emplace_back(idx(ix + 1, iy), idx(ix, iy + 1));
    }
  }

  double rest = target == LatticeTarget::Diagonal ? std::numbers::sqrt2
                                                  : s / std::numbers::sqrt2;

  Vector x0(2 * s * s);
  for (int iy = 0; iy < s; ++iy) {
    for (int ix = 0; ix < s; ++ix) {
      x0[2 * idx(ix, iy)] = ix;
      x0[2 * idx(ix, iy) + 1] = iy;
    }
  }

  auto system = std::make_shared<LatticeSystem>(s, std::move(bars),
                                                std::move(diagonals), rest);
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildOrthogonalGroup(int s) {
  if (s < 2) throw std::invalid_argument("matrix: s must be >= 2");
  auto system = std::make_shared<OrthogonalGroupSystem>(s);
  Vector x0 = Vector::Zero(s * s);
  for (int i = 0; i < s; ++i) x0[i * s + i] = 1.0;
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildNgon(int n, std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("ngon: n must be >= 4");

  Rng rng(seed);

  // n distinct chords, uniform over vertex pairs that are not polygon edges.
  // Draw-with-rejection; a bounded number of rebuild attempts guards against
  // instances with too few admissible pairs.
  std::set<std::pair<int, int>> chords;
  auto isPolygonEdge = [n](int i, int j) {
    return j - i == 1 || (i == 0 && j == n - 1);
  };
  const int max_attempts = 100;
  bool ok = false;
  for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
    chords.clear();
    const long draw_budget = 200L * n;
    for (long d = 0; d < draw_budget && static_cast<int>(chords.size()) < n;
         ++d) {
      int a = static_cast<int>(rng.uniformInt(n));
      int b = static_cast<int>(rng.uniformInt(n));
      if (a == b) continue;
      int i = std::min(a, b), j = std::max(a, b);
      if (isPolygonEdge(i, j)) continue;
      chords.insert({i, j});
    }
    ok = static_cast<int>(chords.size()) == n;
  }
  if (!ok) {
    throw BuildError("ngon: could not draw " + std::to_string(n) +
                     " distinct chords");
  }

  // Regular polygon with unit edge spacing, then perturb.
  double circumradius = 0.5 / std::sin(std::numbers::pi / n);
  Vector x0(3 * n);
  for (int k = 0; k < n; ++k) {
    double angle = 2.0 * std::numbers::pi * k / n;
    double radial = circumradius * (0.6 + 0.4 * rng.uniform());
    x0[3 * k] = radial * std::cos(angle);
    x0[3 * k + 1] = radial * std::sin(angle);
    x0[3 * k + 2] = 0.5 * rng.normal();
  }

  // Bar lengths are measured from the perturbed configuration, so it is
  // feasible exactly.
  std::vector<BarFramework::Bar> bars;
  bars.reserve(static_cast<std::size_t>(2 * n));
  auto measured = [&x0](int i, int j) {
    return (x0.segment(3 * i, 3) - x0.segment(3 * j, 3)).squaredNorm();
  };
  for (int k = 0; k < n; ++k) {
    int j = (k + 1) % n;
    bars.push_back({k, j, measured(k, j)});
  }
  for (const auto& [i, j] : chords) {
    bars.push_back({i, j, measured(i, j)});
  }

  auto system =
      std::make_shared<BarFramework>("ngon", 3, n, std::move(bars),
                                     std::vector<Vector>{});
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildCircle() {
  auto system = std::make_shared<HypersphereSystem>(2, "circle");
  Vector x0(2);
  x0 << 1.0, 0.0;
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildSphere() {
  auto system = std::make_shared<HypersphereSystem>(3, "sphere");
  Vector x0(3);
  x0 << 0.0, 0.0, 1.0;
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildEllipse(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("ellipse: semi-axes must be positive");
  }
  auto system = std::make_shared<EllipseSystem>(a, b);
  Vector x0(2);
  x0 << a, 0.0;
  return {std::move(system), std::move(x0)};
}

BuiltSystem buildTorus(double R, double r) {
  if (!(R > r) || !(r > 0.0)) {
    throw std::invalid_argument("torus: requires R > r > 0");
  }
  auto system = std::make_shared<TorusSystem>(R, r);
  Vector x0(3);
  x0 << R + r, 0.0, 0.0;
  return {std::move(system), std::move(x0)};
}

}  // namespace manifold::systems
