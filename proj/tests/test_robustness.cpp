// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0
//
// Frozen values come from tests/oracles/oracles.py.

#include <doctest.h>

#include "gpcert/robustness.hpp"
#include "support.hpp"

using namespace gpcert;
using namespace gpcert::testing;

namespace {

// Ingested probit model with latent mean sum_i t_i exp(-theta (x - c_i)^2)
// and prior variance (S = 0).
GpModel bumps(std::initializer_list<double> centres, std::initializer_list<double> weights, double theta) {
  const Vector c = vec(centres);
  return GpModel(Task::BinaryClassification, {KernelSpec::squared_exponential(1.0, vec({theta}))}, c, vec(weights),
                 Matrix::Zero(c.size(), c.size()));
}

}  // namespace

TEST_CASE("tiny radius certifies a confident point") {
  const GpModel m = bumps({-1.0, 1.0}, {1.0, -1.0}, 1.0);
  const SafetyVerdict v = certify_classification(m, vec({-1.0}), 1e-6, BnbConfig{});
  CHECK(v.verdict == Verdict::Certified);
  CHECK(v.predicted == 0);
  CHECK(v.pi_star(0) > v.pi_star(1));
  const SafetyVerdict wider = certify_classification(m, vec({-1.0}), 0.3, BnbConfig{});
  CHECK(wider.verdict == Verdict::Certified);
}

TEST_CASE("boundary inside the box is falsified with a verified witness") {
  // The latent mean changes sign at 0.
  const GpModel m = bumps({-1.0, 1.0}, {1.0, -1.0}, 1.0);
  const SafetyVerdict v = certify_classification(m, vec({-0.2}), 0.5, BnbConfig{});
  REQUIRE(v.verdict == Verdict::Falsified);
  CHECK(m.predict_class(v.witness) != v.predicted);
  CHECK(std::abs(v.witness(0) + 0.2) <= 0.5 + 1e-12);
}

TEST_CASE("non-l-inf balls use the bounding box") {
  std::mt19937_64 rng(3);
  const GpModel m = random_binary_model(rng, 12, 2, random_kernel(rng, 2, Family::SE), Link{});
  const Vector x = vec({0.3, -0.2});
  const SafetyVerdict v = certify_classification(m, x, 0.2, BnbConfig{}, 2.0);
  CHECK(v.bounding_box);
  if (v.verdict == Verdict::Falsified) CHECK((v.witness - x).norm() <= 0.2 + 1e-9);
}

TEST_CASE("safety curve lower bound does not increase with the radius") {
  std::mt19937_64 rng(5);
  const GpModel m = random_binary_model(rng, 12, 2, random_kernel(rng, 2, Family::SE), Link{});
  const Vector x = vec({0.1, 0.4});
  const Index cls = m.predict_class(x);
  const auto curve = safety_curve(m, x, {0.02, 0.05, 0.1, 0.2, 0.4}, BnbConfig{}, cls);
  for (size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].min_lower <= curve[i - 1].min_lower);
    CHECK(curve[i].raw_min_lower <= curve[i - 1].raw_min_lower + 2 * 0.01);
    CHECK(curve[i].max_upper >= curve[i - 1].max_upper);
  }
  for (const SafetyPoint& p : curve) {
    CHECK(p.min_lower <= p.min_upper);
    CHECK(p.max_lower <= p.max_upper);
  }
}

TEST_CASE("regression robustness") {
  const GpModel zero(Task::Regression, {KernelSpec::squared_exponential(1.0, vec({1.0}))}, vec({0.0, 1.0}),
                     Vector::Zero(2), Matrix::Zero(2, 2));
  CHECK(certify_regression(zero, vec({0.5}), 0.3, 0.0, BnbConfig{}).verdict == Verdict::Certified);

  // mean(x) = 0.5 exp(-x^2); around 0.5 with radius 0.3 the largest
  // deviation is 0.12575417951417817 (dense grid).
  const GpModel one = fit_regression(vec({0.0}), vec({1.0}), KernelSpec::squared_exponential(1.0, vec({1.0})), 1.0);
  const double sup = 0.12575417951417817;
  CHECK(certify_regression(one, vec({0.5}), 0.3, 0.0, BnbConfig{}).verdict == Verdict::Falsified);
  CHECK(certify_regression(one, vec({0.5}), 0.3, sup + 0.03, BnbConfig{}).verdict == Verdict::Certified);
  const SafetyVerdict f = certify_regression(one, vec({0.5}), 0.3, sup - 0.03, BnbConfig{});
  REQUIRE(f.verdict == Verdict::Falsified);
  CHECK(std::abs(one.latent_mean<double>(0, f.witness) - one.latent_mean<double>(0, vec({0.5}))) > sup - 0.03);
}

TEST_CASE("delta metric") {
  std::mt19937_64 rng(7);
  const GpModel m = random_binary_model(rng, 12, 2, random_kernel(rng, 2, Family::SE), Link{});
  const Vector x = vec({0.2, 0.0});
  BnbConfig cfg;
  CHECK(delta_metric(m, x, 0.0, cfg).value <= cfg.epsilon);
  const Estimate d = delta_metric(m, x, 0.15, cfg);
  const Region r = Region::box(x, 0.15);
  double lo = 1.0;
  double hi = 0.0;
  for (const Vector& p : grid(r, 40000)) {
    const double v = m.predict_class_prob(p)(0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(d.value >= hi - lo - 1e-9);
  CHECK(d.value <= hi - lo + 2 * cfg.epsilon);
  CHECK(d.value >= 0.0);
  CHECK(d.value <= 1.0);
  double previous = 0.0;
  for (double g : {0.05, 0.1, 0.2}) {
    const double v = delta_metric(m, x, g, cfg).value;
    CHECK(v >= previous - 2 * cfg.epsilon);
    previous = v;
  }
}

TEST_CASE("interpretability metric") {
  // Latent depends on the first coordinate only, through an odd function;
  // the second coordinate is irrelevant.
  Matrix c(2, 2);
  c << -1.0, 0.0, 1.0, 0.0;
  const GpModel m(Task::BinaryClassification, {KernelSpec::squared_exponential(1.0, vec({0.5, 1e-6}))}, c,
                  vec({-1.0, 1.0}), Matrix::Zero(2, 2));
  BnbConfig cfg;
  cfg.epsilon = 1e-4;
  const Vector x = vec({0.1, 0.3});
  const Estimate irrelevant = interpretability_delta(m, x, 0.2, 1, cfg);
  CHECK(std::abs(irrelevant.value) <= 2 * cfg.epsilon);

  // Small radius: the metric divided by 2 gamma approximates the derivative.
  const double gamma = 0.05;
  const Estimate e = interpretability_delta(m, x, gamma, 0, cfg);
  const double h = 1e-5;
  const double fd =
      (m.predict_class_prob(x + h * vec({1.0, 0.0}))(0) - m.predict_class_prob(x - h * vec({1.0, 0.0}))(0)) / (2 * h);
  CHECK(e.value / (2 * gamma) == doctest::Approx(fd).epsilon(0.1));
  CHECK(std::abs(e.value) <= 2.0);
  CHECK(e.lower <= e.value);
  CHECK(e.value <= e.upper);

  const InterpretabilityReport rep = interpretability_report(m, {x, vec({-0.2, 0.1})}, gamma, {0, 1}, cfg);
  CHECK(rep.values.rows() == 2);
  CHECK(std::abs(rep.mean(0)) > std::abs(rep.mean(1)));
  CHECK(rank_features(rep.mean).front() == 0);
}

TEST_CASE("gradient-sign attack") {
  const GpModel m = bumps({-1.0, 1.0}, {1.0, -1.0}, 1.0);
  const AttackResult none = gpfgs_attack(m, vec({-0.2}), 0.0);
  CHECK_FALSE(none.success);
  CHECK(none.point == vec({-0.2}));

  // Near-linear regime: the mean falls towards the boundary at 0, so the
  // attack succeeds once the radius covers the margin.
  const AttackResult hit = gpfgs_attack(m, vec({-0.2}), 0.5);
  CHECK(hit.success);
  CHECK(m.predict_class(hit.point) != m.predict_class(vec({-0.2})));
  CHECK(certify_classification(m, vec({-0.2}), 0.5, BnbConfig{}).verdict != Verdict::Certified);

  const AttackResult miss = gpfgs_attack(m, vec({-0.2}), 0.1);
  CHECK_FALSE(miss.success);

  const Vector g = latent_mean_gradient(m, 0, vec({-0.2}));
  const double h = 1e-6;
  const double fd = (m.latent_mean<double>(0, vec({-0.2 + h})) - m.latent_mean<double>(0, vec({-0.2 - h}))) / (2 * h);
  CHECK(g(0) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("attack fails where the gradient leads away from the boundary") {
  // Peak just right of x*, steep drop into the other class beyond it, gentle
  // decay on the left.
  const GpModel m = bumps({0.0, 1.0}, {1.0, -3.0}, 4.0);
  const Vector x = vec({-0.1});
  const AttackResult a = gpfgs_attack(m, x, 0.6);
  CHECK_FALSE(a.success);
  const SafetyVerdict v = certify_classification(m, x, 0.6, BnbConfig{});
  REQUIRE(v.verdict == Verdict::Falsified);
  CHECK(m.predict_class(v.witness) != m.predict_class(x));
}

TEST_CASE("adversarial gap curve") {
  std::mt19937_64 rng(9);
  const GpModel m = random_binary_model(rng, 12, 3, random_kernel(rng, 3, Family::SE), Link{});
  const Vector x = vec({0.2, -0.1, 0.3});
  const auto curve = adversarial_gap_curve(m, x, {2, 0, 1}, 0.3, {0, 1, 2, 3}, BnbConfig{});
  const Vector p = m.predict_class_prob(x);
  const Index pred = m.predict_class(x);
  CHECK(curve[0].upper == doctest::Approx(2 * p(pred) - 1).epsilon(1e-9));
  CHECK(curve[0].lower <= 2 * p(pred) - 1 + 1e-12);
  CHECK(curve[0].lower >= 2 * p(pred) - 1 - 0.02);
  for (size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].lower <= curve[i - 1].lower);
    CHECK(curve[i].upper <= curve[i - 1].upper);
  }

  // A wide box over every feature reaches the other class: the attained
  // gap, not just its bound, turns negative.
  const auto wide = adversarial_gap_curve(m, x, {0, 1, 2}, 2.0, {3}, BnbConfig{});
  CHECK(wide[0].upper < 0.0);
  CHECK(wide[0].lower <= wide[0].upper);
}
