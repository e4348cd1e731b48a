// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0
//
// Frozen values come from tests/oracles/oracles.py.

#include <doctest.h>

#include "gpcert/bounds.hpp"
#include "gpcert/interval.hpp"
#include "gpcert/lp.hpp"
#include "gpcert/qp.hpp"
#include "support.hpp"

using namespace gpcert;
using namespace gpcert::testing;

TEST_CASE("region basics") {
  const Region r(vec({0.0, 0.0}), vec({1.0, 4.0}));
  CHECK(r.diameter() == doctest::Approx(4.0));
  CHECK(r.contains(vec({0.5, 3.0})));
  CHECK_FALSE(r.contains(vec({1.5, 3.0})));
  CHECK(r.clamp(vec({2.0, -1.0})) == vec({1.0, 0.0}));
  const auto [a, b] = r.split(0);
  CHECK(a.upper(0) == doctest::Approx(0.5));
  CHECK(b.lower(0) == doctest::Approx(0.5));
  CHECK(r.contains(a));
  CHECK(Region::point(vec({1.0, 2.0})).is_point());
  CHECK_THROWS(Region(vec({1.0}), vec({0.0})));
}

TEST_CASE("interval arithmetic") {
  const Interval a{-1.0, 2.0};
  const Interval b{0.5, 3.0};
  CHECK((a * b).lo == doctest::Approx(-3.0));
  CHECK((a * b).hi == doctest::Approx(6.0));
  CHECK(sqr(a).lo == doctest::Approx(0.0));
  CHECK(sqr(a).hi == doctest::Approx(4.0));
  CHECK((a - b).lo == doctest::Approx(-4.0));
  CHECK((Interval(1.0) / b).hi == doctest::Approx(2.0));
  CHECK(intersect(a, b).lo == doctest::Approx(0.5));

  // Solving a point system reproduces the dense solution.
  IntervalMatrix m(2, 2);
  m(0, 0) = 2.0;
  m(0, 1) = 0.5;
  m(1, 0) = 0.5;
  m(1, 1) = 1.0;
  IntervalMatrix rhs(2, 1);
  rhs(0, 0) = 1.0;
  rhs(1, 0) = {-0.1, 0.1};
  const IntervalMatrix sol = interval_solve(m, rhs);
  CHECK(sol(0, 0).contains(1.0 / 1.75));
  CHECK(sol(1, 0).contains(-0.5 / 1.75));
}

TEST_CASE("LP against a reference solver") {
  LinearProgram lp;
  lp.objective = vec({-1.0, -2.0, 0.5});
  lp.constraints.resize(2, 3);
  lp.constraints << 1, 1, 1, 1, -1, 2;
  lp.rhs = vec({4.0, 1.0});
  lp.lower = vec({0.0, 0.0, -1.0});
  lp.upper = vec({3.0, 2.5, 1.0});
  const LpResult r = solve_lp(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.value == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(r.solution(0) == doctest::Approx(2.5));
  CHECK(r.solution(1) == doctest::Approx(2.5));
  CHECK(r.solution(2) == doctest::Approx(-1.0));
  CHECK(r.dual_bound <= r.value + 1e-9);

  lp.rhs = vec({-10.0, 1.0});
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("LP warm start agrees with cold solves") {
  std::mt19937_64 rng(21);
  LinearProgram lp;
  lp.constraints = random_inputs(rng, 6, 5, -1.0, 1.0);
  lp.rhs = uniform_vector(rng, 6, 0.5, 2.0);
  lp.lower = Vector::Constant(5, -1.0);
  lp.upper = Vector::Constant(5, 1.0);
  lp.objective = uniform_vector(rng, 5, -1.0, 1.0);
  SimplexSolver warm(lp);
  for (int k = 0; k < 10; ++k) {
    const Vector c = uniform_vector(rng, 5, -1.0, 1.0);
    LinearProgram cold = lp;
    cold.objective = c;
    CHECK(warm.solve(c).value == doctest::Approx(solve_lp(cold).value).epsilon(1e-10));
  }
}

TEST_CASE("QP against a reference solver") {
  QuadraticProgram qp;
  qp.hessian.resize(2, 2);
  qp.hessian << 2.0, 0.5, 0.5, 1.0;
  qp.linear = vec({-2.0, -3.0});
  qp.constraints.resize(1, 2);
  qp.constraints << 1.0, 1.0;
  qp.rhs = vec({1.5});
  qp.lower = vec({-1.0, -1.0});
  qp.upper = vec({1.0, 1.0});
  const QpResult r = solve_qp(qp);
  REQUIRE(r.converged);
  CHECK(r.value == doctest::Approx(-3.0000000000000004).epsilon(1e-10));
  CHECK(r.solution(0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(r.solution(1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.kkt_residual <= 1e-8);
  CHECK(r.lower_bound <= r.value + 1e-12);
  CHECK(r.lower_bound >= r.value - 1e-8);
}

TEST_CASE("QP with dependent working rows") {
  // min (x - 1)^2 + (y - 1)^2 with x + y <= 1 stated twice and x <= 0.5
  // also tight at the optimum (0.5, 0.5).
  QuadraticProgram qp;
  qp.hessian = 2.0 * Matrix::Identity(2, 2);
  qp.linear = vec({-2.0, -2.0});
  qp.constraints.resize(4, 2);
  qp.constraints << 1.0, 1.0, 2.0, 2.0, 1.0, 0.0, 3.0, 3.0;
  qp.rhs = vec({1.0, 2.0, 0.5, 3.0});
  qp.lower = vec({0.0, 0.0});
  qp.upper = vec({1.0, 1.0});
  const QpResult r = solve_qp(qp);
  REQUIRE(r.converged);
  CHECK(r.value + 2.0 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.kkt_residual <= 1e-8);
  CHECK(r.lower_bound >= r.value - 1e-8);
}

TEST_CASE("mean bound on a one point model") {
  const GpModel m = fit_regression(vec({0.0}), vec({1.0}), KernelSpec::squared_exponential(1.0, vec({1.0})), 1.0);
  const Region r(vec({2.0}), vec({3.0}));
  const MeanBound b = bound_mean(m, r);
  // mean(x) = 0.5 exp(-x^2), decreasing on [2, 3].
  CHECK(b.value.lo <= 0.5 * std::exp(-9.0) + 1e-15);
  CHECK(b.value.hi >= 0.5 * std::exp(-4.0) - 1e-15);
  CHECK(b.value.lo == doctest::Approx(0.5 * std::exp(-9.0)).epsilon(1e-9));
  CHECK(b.value.hi == doctest::Approx(0.5 * std::exp(-4.0)).epsilon(1e-9));
  CHECK(b.argmin(0) == doctest::Approx(3.0));
  CHECK(b.argmax(0) == doctest::Approx(2.0));

  // Variance 1 - 0.5 exp(-2 x^2), increasing in |x|.
  const double lo = bound_variance_lower(m, r);
  const double hi = bound_variance_upper(m, r);
  CHECK(lo <= 1.0 - 0.5 * std::exp(-8.0) + 1e-12);
  CHECK(hi >= 1.0 - 0.5 * std::exp(-18.0) - 1e-12);
  CHECK(hi - lo <= 0.5 * std::exp(-8.0) + 1e-6);
}

TEST_CASE("zero weights bound the mean at zero") {
  const GpModel m(Task::Regression, {KernelSpec::squared_exponential(1.0, vec({1.0}))}, vec({0.0, 1.0}),
                  Vector::Zero(2), Matrix::Zero(2, 2));
  const MeanBound b = bound_mean(m, Region(vec({-1.0}), vec({2.0})));
  CHECK(b.value.lo == doctest::Approx(0.0));
  CHECK(b.value.hi == doctest::Approx(0.0));
}

TEST_CASE("mean and variance bounds are sound on random models") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 30; ++k) {
    const Index d = 1 + k % 2;
    const GpModel m = random_regression_model(rng, 12, d, random_kernel(rng, d, family_at(k)));
    const Region r = random_region(rng, d, 1.0);
    const MeanBound mb = bound_mean(m, r);
    const RegionKernelBounds kb(m, r, 0, true);
    const VarianceBound vb = bound_variance(m, kb, true, true);
    for (const Vector& x : grid(r, 2500)) {
      const Posterior p = m.posterior_at(x);
      CHECK(mb.value.contains(p.mean(0), 1e-9));
      CHECK(vb.lower <= p.covariance(0, 0) + 1e-9);
      CHECK(vb.upper >= p.covariance(0, 0) - 1e-9);
    }
    CHECK(r.contains(mb.argmin));
    CHECK(r.contains(vb.argmax));
  }
}

TEST_CASE("relaxations tighten the interval variance bound") {
  std::mt19937_64 rng(23);
  int tighter = 0;
  for (int k = 0; k < 10; ++k) {
    const GpModel m = random_regression_model(rng, 10, 2, random_kernel(rng, 2, Family::SE));
    const Region r = random_region(rng, 2, 1.0);
    const RegionKernelBounds kb(m, r, 0, true);
    const VarianceBound cheap = bound_variance_interval(m, kb);
    const VarianceBound full = bound_variance(m, kb, true, true);
    CHECK(full.lower >= cheap.lower - 1e-12);
    CHECK(full.upper <= cheap.upper + 1e-12);
    tighter += full.upper - full.lower < cheap.upper - cheap.lower - 1e-9;
  }
  CHECK(tighter > 0);
}

TEST_CASE("moment bounds cover the multi-class posterior") {
  std::mt19937_64 rng(29);
  const Index n = 6;
  const Matrix x = random_inputs(rng, n, 2);
  const Matrix t = random_inputs(rng, n, 3, -1.0, 1.0);
  const Matrix a = random_inputs(rng, 3 * n, 3 * n, -0.3, 0.3);
  const GpModel m(Task::MultiClass, {KernelSpec::squared_exponential(1.0, vec({0.5, 0.5}))}, x, t,
                  a * a.transpose() / (3.0 * n));
  const Region r = random_region(rng, 2, 0.5);
  const MomentBounds mb = bound_moments(m, r);
  for (const Vector& p : grid(r, 400)) {
    const Posterior post = m.posterior_at(p);
    for (Index i = 0; i < 3; ++i) {
      CHECK(post.mean(i) >= mb.mean_lower(i) - 1e-9);
      CHECK(post.mean(i) <= mb.mean_upper(i) + 1e-9);
      for (Index j = 0; j < 3; ++j) {
        CHECK(post.covariance(i, j) >= mb.cov_lower(i, j) - 1e-9);
        CHECK(post.covariance(i, j) <= mb.cov_upper(i, j) + 1e-9);
      }
    }
  }
}
