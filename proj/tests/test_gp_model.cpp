// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0
//
// Frozen values come from tests/oracles/oracles.py.

#include <doctest.h>

#include "gpcert/gp_model.hpp"
#include "gpcert/linalg.hpp"
#include "support.hpp"

using namespace gpcert;
using namespace gpcert::testing;

namespace {

Matrix column(std::initializer_list<double> v) { return vec(v); }

}  // namespace

TEST_CASE("single point regression") {
  const GpModel m = fit_regression(column({0.0}), vec({1.0}), KernelSpec::squared_exponential(1.0, vec({1.0})), 1.0);
  CHECK(m.weights()(0, 0) == doctest::Approx(0.5));
  const Posterior p = m.posterior_at(vec({0.0}));
  CHECK(p.mean(0) == doctest::Approx(0.5));
  CHECK(p.covariance(0, 0) == doctest::Approx(0.5));

  const Posterior far = m.posterior_at(vec({40.0}));
  CHECK(far.mean(0) == doctest::Approx(0.0));
  CHECK(far.covariance(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("zero targets give a zero mean") {
  const GpModel m = fit_regression(column({-1.0, 0.0, 2.0}), Vector::Zero(3),
                                   KernelSpec::squared_exponential(1.0, vec({1.0})), 0.1);
  CHECK(m.weights().norm() == doctest::Approx(0.0));
  CHECK(m.posterior_at(vec({0.7})).mean(0) == doctest::Approx(0.0));
}

TEST_CASE("three point regression against a dense solve") {
  const GpModel m = fit_regression(column({-1.0, 0.5, 2.0}), vec({0.3, -1.2, 0.8}),
                                   KernelSpec::squared_exponential(1.0, vec({0.5})), 0.1);
  const Vector t = m.weights().col(0);
  CHECK(t(0) == doctest::Approx(0.7537602709957406).epsilon(1e-10));
  CHECK(t(1) == doctest::Approx(-1.6713591696517174).epsilon(1e-10));
  CHECK(t(2) == doctest::Approx(1.2129430527529785).epsilon(1e-10));
  const Posterior p = m.posterior_at(vec({0.25}));
  CHECK(p.mean(0) == doctest::Approx(-1.0125229234745923).epsilon(1e-10));
  CHECK(p.covariance(0, 0) == doctest::Approx(0.11353681318726139).epsilon(1e-10));
}

TEST_CASE("regression rejects bad input") {
  const KernelSpec k = KernelSpec::squared_exponential(1.0, vec({1.0}));
  CHECK_THROWS(fit_regression(Matrix(0, 1), Vector(0), k, 0.1));
  CHECK_THROWS(fit_regression(column({0.0}), vec({1.0}), k, 0.0));
  CHECK_THROWS(fit_regression(column({0.0, 1.0}), vec({1.0}), k, 0.1));
}

TEST_CASE("Laplace probit against direct optimisation") {
  const GpModel m = fit_laplace_binary(column({-2.0, -1.2, -0.5, 0.3, 1.1, 1.9}), vec({-1, -1, 1, -1, 1, 1}),
                                       KernelSpec::squared_exponential(1.0, vec({0.7})), Link{});
  const double mean[] = {-0.0182600339764447, 0.23867588710178622};
  const double var[] = {0.481797842548327, 0.5094373269204802};
  const double pi[] = {0.49401587190930263, 0.5770169330496752};
  const double xs[] = {0.0, 0.8};
  for (int i = 0; i < 2; ++i) {
    const Posterior p = m.posterior_at(vec({xs[i]}));
    CHECK(p.mean(0) == doctest::Approx(mean[i]).epsilon(1e-6));
    CHECK(p.covariance(0, 0) == doctest::Approx(var[i]).epsilon(1e-6));
    CHECK(m.predict_class_prob(vec({xs[i]}))(0) == doctest::Approx(pi[i]).epsilon(1e-6));
  }
}

TEST_CASE("Laplace on mirrored data is symmetric") {
  const GpModel m = fit_laplace_binary(column({-1.5, -0.5, 0.5, 1.5}), vec({-1, 1, -1, 1}),
                                       KernelSpec::squared_exponential(1.0, vec({1.0})), Link{});
  // Labels flip under x -> -x, so the latent mean is odd.
  CHECK(m.posterior_at(vec({0.0})).mean(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(m.predict_class_prob(vec({0.0}))(0) == doctest::Approx(0.5));
}

TEST_CASE("Laplace separates separable data") {
  Matrix x(20, 1);
  Vector y(20);
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = -2.0 + 4.0 * i / 19.0;
    y(i) = x(i, 0) > 0.0 ? 1.0 : -1.0;
  }
  for (const Link::Kind kind : {Link::Kind::Probit, Link::Kind::Logistic}) {
    const GpModel m = fit_laplace_binary(x, y, KernelSpec::squared_exponential(1.0, vec({1.0})), Link{kind, 1.0});
    int correct = 0;
    for (int i = 0; i < 20; ++i) correct += (m.latent_mean<double>(0, x.row(i).transpose()) > 0.0) == (y(i) > 0.0);
    CHECK(correct == 20);
  }
  CHECK_THROWS(fit_laplace_binary(x, Vector::Ones(20), KernelSpec::squared_exponential(1.0, vec({1.0})), Link{}));
}

TEST_CASE("probit closed form") {
  CHECK(binary_probability(Link{}, 0.0, 3.0) == doctest::Approx(0.5));
  CHECK(binary_probability(Link{}, 1.0, 0.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  const Link logistic{Link::Kind::Logistic, 1.0};
  CHECK(binary_probability(logistic, 0.0, 0.0) == doctest::Approx(0.5));
  CHECK(binary_probability(logistic, 0.7, 0.0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))).epsilon(1e-12));
  for (double mu = -5.0; mu <= 5.0; mu += 0.5) {
    for (double v : {1e-6, 0.1, 1.0, 4.0, 10.0}) {
      const double quad = gaussian_expectation([](double f) { return normal_cdf(f); }, mu, v);
      CHECK(binary_probability(Link{}, mu, v) == doctest::Approx(quad).epsilon(1e-6));
    }
  }
}

TEST_CASE("ingested multi-class model") {
  std::mt19937_64 rng(2);
  const Index n = 5;
  const Matrix x = random_inputs(rng, n, 2);
  const Matrix t = random_inputs(rng, n, 3, -1.0, 1.0);
  const Matrix a = random_inputs(rng, 3 * n, 3 * n, -0.3, 0.3);
  const Matrix s = a * a.transpose() / (3.0 * n);
  const GpModel m(Task::MultiClass, {KernelSpec::squared_exponential(1.0, vec({0.5, 0.5}))}, x, t, s);
  CHECK(m.classes() == 3);
  CHECK(m.link().kind == Link::Kind::Softmax);
  const Vector p = m.predict_class_prob(vec({0.2, -0.3}));
  CHECK(p.sum() == doctest::Approx(1.0));
  const Posterior post = m.posterior_at(vec({0.2, -0.3}));
  const Vector mc = softmax_probabilities(post.mean, post.covariance, 200000, 9);
  CHECK((p - mc).lpNorm<Eigen::Infinity>() < 5e-3);
  CHECK(jacobi_eigen(post.covariance).values.minCoeff() >= -1e-10);

  Matrix bad = s;
  bad(0, 1) += 0.1;
  CHECK_THROWS(GpModel(Task::MultiClass, {KernelSpec::squared_exponential(1.0, vec({0.5, 0.5}))}, x, t, bad));
}

TEST_CASE("posterior variance is nonnegative") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const GpModel m = random_regression_model(rng, 15, 2, random_kernel(rng, 2, family_at(k)));
    for (int s = 0; s < 200; ++s) CHECK(m.posterior_at(uniform_vector(rng, 2, -3, 3)).covariance(0, 0) >= 0.0);
  }
}

TEST_CASE("symmetric eigen and quadrature helpers") {
  Matrix e(3, 3);
  e << 4, 1, -2, 1, 2, 0, -2, 0, 3;
  const SymmetricEigen eig = jacobi_eigen(e);
  CHECK(eig.values(0) == doctest::Approx(0.9999999999999993).epsilon(1e-12));
  CHECK(eig.values(1) == doctest::Approx(2.267949192431123).epsilon(1e-12));
  CHECK(eig.values(2) == doctest::Approx(5.732050807568877).epsilon(1e-12));
  CHECK((eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose() - e).norm() < 1e-10);
  CHECK(gaussian_expectation([](double f) { return std::cos(f); }, 0.3, 0.5) ==
        doctest::Approx(0.7440168058277086).epsilon(1e-12));
  CHECK(normal_quantile(normal_cdf(0.37)) == doctest::Approx(0.37).epsilon(1e-10));
}
