#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "manifold/errors.hpp"
#include "manifold/sampler.hpp"
#include "manifold/systems.hpp"
#include "test_helpers.hpp"

using namespace manifold;
using namespace test_helpers;

namespace {

ChainState stateAt(ManifoldSampler& sampler, const Vector& x) {
  return sampler.makeState(x);
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("tangent step projects out the normal component") {
  auto circle = systems::buildCircle();
  SamplerParams p;
  ManifoldSampler sampler(circle.system, p);
  ChainState state = stateAt(sampler, vec2(1.0, 0.0));

  TangentStep v = tangentStep(state, 1.0, vec2(3.0, 4.0));
  CHECK(v.v[0] == doctest::Approx(0.0));
  CHECK(v.v[1] == doctest::Approx(4.0));
  CHECK(v.norm_sq == doctest::Approx(16.0));

  auto sphere = systems::buildSphere();
  ManifoldSampler sampler3(sphere.system, p);
  ChainState state3 = stateAt(sampler3, vec3(0.0, 0.0, 1.0));
  TangentStep w = tangentStep(state3, 0.5, vec3(1.0, 2.0, 3.0));
  CHECK(w.v[0] == doctest::Approx(0.5));
  CHECK(w.v[1] == doctest::Approx(1.0));
  CHECK(w.v[2] == doctest::Approx(0.0));
}

TEST_CASE("tangent step matches the dense projector on the polymer") {
  auto bs = systems::buildPolymer(8);
  SamplerParams p;
  p.sigma = 0.25;
  ManifoldSampler sampler(bs.system, p);
  ChainState state = sampler.makeState(bs.initial);

  Rng rng(2);
  Vector noise(bs.system->numVariables());
  for (int i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  TangentStep v = tangentStep(state, 0.25, noise);

  Eigen::MatrixXd Q = dense(state.Q);
  Eigen::MatrixXd projector =
      Eigen::MatrixXd::Identity(Q.rows(), Q.rows()) -
      Q * (Q.transpose() * Q).ldlt().solve(Q.transpose());
  Vector oracle = 0.25 * (projector * noise);
  CHECK((v.v - oracle).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(v.norm_sq == doctest::Approx(oracle.squaredNorm()));

  // orthogonality invariant
  double col_scale = 0.0;
  for (int j = 0; j < Q.cols(); ++j) {
    col_scale = std::max(col_scale, Q.col(j).norm());
  }
  double ortho = (Q.transpose() * v.v).cwiseAbs().maxCoeff();
  CHECK(ortho <= 1e-8 * v.v.lpNorm<Eigen::Infinity>() * col_scale);
}

TEST_CASE("projection on the circle") {
  auto circle = systems::buildCircle();
  SamplerParams p;
  ManifoldSampler sampler(circle.system, p);
  ChainState state = stateAt(sampler, vec2(1.0, 0.0));

  SUBCASE("zero step converges immediately") {
    for (auto variant : {NewtonVariant::Symmetric, NewtonVariant::Traditional}) {
      p.newton_variant = variant;
      auto res = project(state.x, state.Q, state.L, *circle.system, p);
      CHECK(res.success);
      CHECK(res.iters == 1);  // one constraint evaluation, zero updates
      CHECK((res.y - state.x).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SUBCASE("small step lands on the closed-form point") {
    // Solve (1 + 2a)^2 + 0.01 = 1: y = (sqrt(0.99), 0.1).
    for (auto variant : {NewtonVariant::Symmetric, NewtonVariant::Traditional}) {
      p.newton_variant = variant;
      auto res =
          project(vec2(1.0, 0.1), state.Q, state.L, *circle.system, p);
      REQUIRE(res.success);
      CHECK(res.y[0] == doctest::Approx(0.99498743710662).epsilon(1e-5));
      CHECK(res.y[1] == doctest::Approx(0.1));
      CHECK(circle.system->constraintError(res.y) < p.tol);
    }
  }

  SUBCASE("infeasible step fails via the contraction criterion") {
    // (1 + 2a)^2 + 9 = 1 has no real solution.
    for (auto variant : {NewtonVariant::Symmetric, NewtonVariant::Traditional}) {
      p.newton_variant = variant;
      auto res = project(vec2(1.0, 3.0), state.Q, state.L, *circle.system, p);
      CHECK(!res.success);
      CHECK(res.iters < p.max_iter);  // criterion (ii), not the cap
    }
  }
}

TEST_CASE("projection reconstructs its normal-space decomposition") {
  auto bs = systems::buildPolymer(8);
  SamplerParams p;
  p.sigma = 0.3;
  ManifoldSampler sampler(bs.system, p);
  ChainState state = sampler.makeState(bs.initial);
  Rng rng(3);

  int checked = 0;
  while (checked < 20) {
    Vector noise(bs.system->numVariables());
    for (int i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
    TangentStep v = tangentStep(state, p.sigma, noise);
    auto res = project(state.x + v.v, state.Q, state.L, *bs.system, p);
    if (!res.success) continue;
    ++checked;
    // y - x - v = Q a exactly by construction of the iteration; check the
    // retained coefficients reproduce it.
    Vector lhs = res.y - state.x - v.v;
    Vector rhs = state.Q * res.coeffs;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    sampler.step(state, rng);
  }
}

TEST_CASE("reverse tangent step") {
  auto circle = systems::buildCircle();
  SamplerParams p;
  ManifoldSampler sampler(circle.system, p);

  SUBCASE("zero displacement gives a zero step") {
    ChainState state = stateAt(sampler, vec2(1.0, 0.0));
    TangentStep v = reverseTangent(state.x, state.x, state.Q, state.L);
    CHECK(v.v.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(v.norm_sq == doctest::Approx(0.0));
  }

  SUBCASE("projection removes the normal coordinate") {
    ChainState at_y = stateAt(sampler, vec2(0.0, 1.0));
    Vector x = vec2(1.0, 0.0);
    TangentStep v = reverseTangent(x, at_y.x, at_y.Q, at_y.L);
    CHECK(v.v[0] == doctest::Approx(1.0));
    CHECK(v.v[1] == doctest::Approx(0.0));
  }

  SUBCASE("matches the dense projector on the polymer") {
    auto bs = systems::buildPolymer(8);
    SamplerParams pp;
    pp.sigma = 0.3;
    ManifoldSampler ps(bs.system, pp);
    ChainState state = ps.makeState(bs.initial);
    Rng rng(5);
    ps.run(state, rng, 50);
    ChainState from = state;
    ps.run(state, rng, 50);

    TangentStep v = reverseTangent(from.x, state.x, state.Q, state.L);
    Eigen::MatrixXd Q = dense(state.Q);
    Eigen::MatrixXd projector =
        Eigen::MatrixXd::Identity(Q.rows(), Q.rows()) -
        Q * (Q.transpose() * Q).ldlt().solve(Q.transpose());
    Vector oracle = projector * (from.x - state.x);
    CHECK((v.v - oracle).cwiseAbs().maxCoeff() < 1e-10);

    // x - y - v_y must lie in the column space of Q_y.
    Vector residual = (from.x - state.x) - v.v;
    Vector coeffs = (Q.transpose() * Q).ldlt().solve(Q.transpose() * residual);
    CHECK((residual - Q * coeffs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("metropolis ratio") {
  auto circle = systems::buildCircle();
  SamplerParams p;
  p.sigma = 0.5;
  ManifoldSampler sampler(circle.system, p);
  ChainState at_x = stateAt(sampler, vec2(1.0, 0.0));
  ChainState at_y = stateAt(sampler, vec2(0.0, 1.0));

  SUBCASE("equal step norms, flat density, hard constraints: always accept") {
    p.use_pseudodet = false;
    TangentStep v1{vec2(0.0, 0.3), 0.09};
    TangentStep v2{vec2(0.3, 0.0), 0.09};
    auto ratio = metropolisRatio(at_x, at_y, v1, v2, p);
    CHECK(ratio.acceptance_prob == doctest::Approx(1.0));
    CHECK(ratio.log_ratio == doctest::Approx(0.0));
  }

  SUBCASE("the ellipse determinant factor is the gradient-norm ratio") {
    auto ellipse = systems::buildEllipse(2, 1);
    SamplerParams pe;
    pe.sigma = 0.5;
    ManifoldSampler se(ellipse.system, pe);
    ChainState ex = se.makeState(vec2(2.0, 0.0));  // |Q| = 1
    ChainState ey = se.makeState(vec2(0.0, 1.0));  // |Q| = 2
    TangentStep v1{vec2(0.0, 0.2), 0.04};
    TangentStep v2{vec2(0.2, 0.0), 0.04};

    pe.use_pseudodet = true;
    auto soft = metropolisRatio(ex, ey, v1, v2, pe);
    pe.use_pseudodet = false;
    auto hard = metropolisRatio(ex, ey, v1, v2, pe);
    CHECK(soft.acceptance_prob ==
          doctest::Approx(0.5 * hard.acceptance_prob));
    CHECK(soft.log_ratio - hard.log_ratio ==
          doctest::Approx(std::log(0.5)));
  }
}

TEST_CASE("determinant ratio equals the log-sum route") {
  auto bs = systems::buildPolymer(8);
  SamplerParams p;
  p.sigma = 0.3;
  ManifoldSampler sampler(bs.system, p);
  ChainState state = sampler.makeState(bs.initial);
  Rng rng(9);
  sampler.run(state, rng, 100);
  ChainState previous = state;
  for (int trial = 0; trial < 30; ++trial) {
    sampler.run(state, rng, 10);
    double prod = 1.0;
    double log_sum = 0.0;
    for (int i = 0; i < previous.L.diagonal().size(); ++i) {
      prod *= previous.L.diagonal()[i] / state.L.diagonal()[i];
      log_sum += std::log(previous.L.diagonal()[i]) -
                 std::log(state.L.diagonal()[i]);
    }
    CHECK(prod == doctest::Approx(std::exp(log_sum)).epsilon(1e-10));
    previous = state;
  }
}

TEST_CASE("orthogonal group accepts at probability one") {
  auto bs = systems::buildOrthogonalGroup(3);
  SamplerParams p;
  p.sigma = 0.3;
  p.tol = 1e-8;
  ManifoldSampler sampler(bs.system, p);
  ChainState state = sampler.makeState(bs.initial);
  Rng rng(21);
  int metropolis_reached = 0;
  for (int step = 0; step < 2000; ++step) {
    StepOutcome out = sampler.step(state, rng);
    if (out.acceptance_prob) {
      ++metropolis_reached;
      CHECK(*out.acceptance_prob > 0.999);
    }
  }
  CHECK(metropolis_reached > 1000);
}

TEST_CASE("vanishing step size accepts immediately") {
  for (const auto& bs :
       {systems::buildCircle(), systems::buildPolymer(6),
        systems::buildOrthogonalGroup(3)}) {
    SamplerParams p;
    p.sigma = 1e-12;
    ManifoldSampler sampler(bs.system, p);
    ChainState state = sampler.makeState(bs.initial);
    Rng rng(33);
    for (int step = 0; step < 50; ++step) {
      StepOutcome out = sampler.step(state, rng);
      CHECK((out.result == StepResult::Accepted));
      CHECK(out.forward_iters == 1);
      // the identity move up to the cancellation noise of x - y at this sigma
      CHECK(*out.acceptance_prob > 0.999);
    }
  }
}

TEST_CASE("run_chain bookkeeping") {
  auto bs = systems::buildCircle();
  SamplerParams p;
  p.sigma = 0.5;
  p.use_pseudodet = false;
  ManifoldSampler sampler(bs.system, p);
  Rng rng(45);

  SUBCASE("zero steps produce empty stats") {
    ChainState state = sampler.makeState(bs.initial);
    ChainStats stats = sampler.run(state, rng, 0);
    CHECK(stats.n_steps == 0);
    CHECK(stats.accepted() == 0);
  }

  SUBCASE("off-manifold starts abort") {
    ChainState state = sampler.makeState(bs.initial);
    state.x[0] += 0.1;
    CHECK_THROWS_AS(sampler.run(state, rng, 10), SingularStartError);
    CHECK_THROWS_AS(sampler.makeState(vec2(1.1, 0.0)), SingularStartError);
  }

  SUBCASE("thinning records every thin-th state") {
    ChainState state = sampler.makeState(bs.initial);
    long records = 0;
    ChainStats stats = sampler.run(state, rng, 1000, 10,
                                   [&](long step, const ChainState&) {
                                     ++records;
                                     CHECK(step % 10 == 0);
                                   });
    CHECK(records == 100);
    CHECK(stats.n_steps == 1000);
  }

  SUBCASE("counts sum to the number of steps") {
    ChainState state = sampler.makeState(bs.initial);
    ChainStats stats = sampler.run(state, rng, 2000);
    long total = 0;
    for (long c : stats.by_result) total += c;
    CHECK(total == stats.n_steps);
    // conditioned means recombine into the overall mean
    double recombined = (stats.meanForwardItersOnSuccess() *
                             double(stats.forward_success_count) +
                         stats.meanForwardItersOnFail() *
                             double(stats.forward_fail_count)) /
                        double(stats.n_steps);
    CHECK(recombined == doctest::Approx(stats.meanForwardIters()));
  }
}

TEST_CASE("chains are reproducible and stay on the manifold") {
  auto bs = systems::buildPolymer(6);
  SamplerParams p;
  p.sigma = 0.3;
  ManifoldSampler sampler(bs.system, p);

  ChainState a = sampler.makeState(bs.initial);
  Rng rng_a(1234);
  sampler.run(a, rng_a, 500, 1, [&](long, const ChainState& s) {
    CHECK(bs.system->constraintError(s.x) < p.tol);
  });

  ManifoldSampler sampler_b(bs.system, p);
  ChainState b = sampler_b.makeState(bs.initial);
  Rng rng_b(1234);
  sampler_b.run(b, rng_b, 500);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("accepted moves are reversible by construction") {
  auto bs = systems::buildPolymer(8);
  SamplerParams p;
  p.sigma = 0.3;
  double xtol = p.resolvedXtol(bs.system->numVariables());
  ManifoldSampler sampler(bs.system, p);
  ChainState state = sampler.makeState(bs.initial);
  Rng rng(56);
  sampler.run(state, rng, 100);

  int checked = 0;
  while (checked < 25) {
    ChainState before = state;
    StepOutcome out = sampler.step(state, rng);
    if (out.result != StepResult::Accepted) continue;
    ++checked;
    // Re-execute the reverse projection the kernel just performed.
    TangentStep v_y = reverseTangent(before.x, state.x, state.Q, state.L);
    auto reverse = project(state.x + v_y.v, state.Q, state.L, *bs.system, p);
    REQUIRE(reverse.success);
    CHECK((reverse.y - before.x).lpNorm<Eigen::Infinity>() <= xtol);
  }
}

TEST_CASE("skip_reverse_check bypasses the reverse projection") {
  auto bs = systems::buildPolymer(8);
  SamplerParams p;
  p.sigma = 0.3;
  p.skip_reverse_check = true;
  ManifoldSampler sampler(bs.system, p);
  ChainState state = sampler.makeState(bs.initial);
  Rng rng(67);
  ChainStats stats = sampler.run(state, rng, 2000);
  CHECK(stats.count(StepResult::RejectedReverseProjection) == 0);
  CHECK(stats.reverse_attempts == 0);
}
