// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/gp_model.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace gpcert {

namespace {

constexpr Index kEigenCacheLimit = 256;

Matrix gram(const KernelSpec& kernel, const Matrix& inputs) {
  const Index n = inputs.rows();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = eval_kernel(kernel, Vector(inputs.row(i)), Vector(inputs.row(j)));
  return k;
}

// Log-likelihood of one label with its first two derivatives in f.
struct LabelTerms {
  double log_p = 0.0;
  double grad = 0.0;
  double neg_hess = 0.0;
};

LabelTerms label_terms(const Link& link, double y, double f) {
  LabelTerms r;
  if (link.kind == Link::Kind::Probit) {
    const double z = link.lambda * y * f;
    const double h = normal_hazard(z);
    r.log_p = z > -35.0 ? std::log(normal_cdf(z)) : -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi);
    r.grad = link.lambda * y * h;
    r.neg_hess = link.lambda * link.lambda * h * (z + h);
  } else {
    const double pi = 1.0 / (1.0 + std::exp(-f));
    const double yf = y * f;
    r.log_p = yf > 0 ? -std::log1p(std::exp(-yf)) : yf - std::log1p(std::exp(yf));
    r.grad = 0.5 * (y + 1.0) - pi;
    r.neg_hess = pi * (1.0 - pi);
  }
  return r;
}

}  // namespace

GpModel::GpModel(Task task, std::vector<KernelSpec> kernels, Matrix inputs, Matrix weights, Matrix posterior, Link link,
                 double noise)
    : task_(task),
      kernels_(std::move(kernels)),
      inputs_(std::move(inputs)),
      weights_(std::move(weights)),
      posterior_(std::move(posterior)),
      link_(link),
      noise_(noise) {
  const Index n = inputs_.rows();
  const Index m = weights_.cols();
  if (n < 1) throw std::invalid_argument("model needs at least one input point");
  if (weights_.rows() != n || m < 1) throw std::invalid_argument("weight matrix must be N x outputs");
  if (posterior_.rows() != n * m || posterior_.cols() != n * m) throw std::invalid_argument("S must be mN x mN");
  if (kernels_.empty() || (kernels_.size() != 1 && static_cast<Index>(kernels_.size()) != m))
    throw std::invalid_argument("need one kernel or one per output");
  if (task_ == Task::BinaryClassification && m != 1) throw std::invalid_argument("binary models have one latent");
  if (task_ == Task::MultiClass && m < 2) throw std::invalid_argument("multi-class models need at least two latents");
  if (task_ == Task::MultiClass) link_.kind = Link::Kind::Softmax;
  if (task_ == Task::BinaryClassification && link_.kind == Link::Kind::Softmax)
    throw std::invalid_argument("binary models use a probit or logistic link");
  if (!(link_.lambda > 0.0)) throw std::invalid_argument("probit slope must be positive");
  if ((posterior_ - posterior_.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, posterior_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("S is not symmetric");
  posterior_ = 0.5 * (posterior_ + posterior_.transpose());

  for (const auto& k : kernels_) {
    k.validate();
    if (k.input_dim() != inputs_.cols()) throw std::invalid_argument("kernel dimension differs from inputs");
    decompositions_.push_back(std::make_shared<const KernelDecomposition>(k));
  }
  eigen_.resize(static_cast<size_t>(m));
  if (n <= kEigenCacheLimit) {
    for (Index c = 0; c < m; ++c) {
      auto eig = std::make_shared<SymmetricEigen>(jacobi_eigen(posterior_block(c, c)));
      if (eig->values.minCoeff() < -1e-8 * std::max(1.0, eig->values.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("S is not positive semidefinite");
      eig->values = eig->values.cwiseMax(0.0);
      eigen_[static_cast<size_t>(c)] = std::move(eig);
    }
  }
}

Index GpModel::classes() const {
  switch (task_) {
    case Task::Regression:
      return 0;
    case Task::BinaryClassification:
      return 2;
    case Task::MultiClass:
      return outputs();
  }
  return 0;
}

Matrix GpModel::posterior_block(Index c, Index d) const {
  const Index n = size();
  return posterior_.block(c * n, d * n, n, n);
}

const KernelSpec& GpModel::kernel(Index c) const { return kernels_.size() == 1 ? kernels_.front() : kernels_[static_cast<size_t>(c)]; }

const KernelDecomposition& GpModel::decomposition(Index c) const {
  return decompositions_.size() == 1 ? *decompositions_.front() : *decompositions_[static_cast<size_t>(c)];
}

const SymmetricEigen* GpModel::block_eigen(Index c) const { return eigen_[static_cast<size_t>(c)].get(); }

Posterior GpModel::posterior_at(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("point dimension differs from model");
  const Index m = outputs();
  const Index n = size();
  Matrix cross(n, m);
  for (Index c = 0; c < m; ++c) cross.col(c) = cross_kernel<double>(c, x);
  Posterior p;
  p.mean.resize(m);
  p.covariance.resize(m, m);
  for (Index c = 0; c < m; ++c) {
    p.mean(c) = cross.col(c).dot(weights_.col(c));
    for (Index d = c; d < m; ++d) {
      double v = -cross.col(c).dot(posterior_.block(c * n, d * n, n, n) * cross.col(d));
      if (c == d) {
        v += eval_kernel(kernel(c), x, x);
        if (v < 0.0 && v > -1e-10) v = 0.0;
      }
      p.covariance(c, d) = p.covariance(d, c) = v;
    }
  }
  return p;
}

double binary_probability(const Link& link, double mean, double variance) {
  variance = std::max(variance, 0.0);
  if (link.kind == Link::Kind::Probit) return normal_cdf(mean / std::sqrt(1.0 / (link.lambda * link.lambda) + variance));
  return gaussian_expectation([](double f) { return 1.0 / (1.0 + std::exp(-f)); }, mean, variance);
}

Vector softmax_probabilities(const Vector& mean, const Matrix& cov, int samples, std::uint64_t seed) {
  const Index m = mean.size();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector acc = Vector::Zero(m);
  Vector z(m);
  for (int s = 0; s < samples; ++s) {
    for (Index c = 0; c < m; ++c) z(c) = normal(rng);
    Vector f = mean + root * z;
    f.array() -= f.maxCoeff();
    const Vector e = f.array().exp();
    acc += e / e.sum();
  }
  return acc / samples;
}

Vector softmax_probabilities(const Vector& mean, const Matrix& cov) {
  const Index m = mean.size();
  // Tensor Gauss-Hermite while the grid stays small, Monte Carlo otherwise.
  int nodes = 32;
  while (nodes >= 8 && std::pow(static_cast<double>(nodes), static_cast<double>(m)) > 4e5) nodes /= 2;
  if (nodes < 8) return softmax_probabilities(mean, cov, 200000, 0x9e3779b97f4a7c15ULL);
  const GaussHermiteRule& rule = gauss_hermite(nodes);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Matrix root = std::sqrt(2.0) * eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::vector<int> idx(static_cast<size_t>(m), 0);
  Vector acc = Vector::Zero(m);
  Vector z(m);
  const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(m));
  while (true) {
    double w = norm;
    for (Index c = 0; c < m; ++c) {
      z(c) = rule.nodes(idx[static_cast<size_t>(c)]);
      w *= rule.weights(idx[static_cast<size_t>(c)]);
    }
    Vector f = mean + root * z;
    f.array() -= f.maxCoeff();
    const Vector e = f.array().exp();
    acc += w * e / e.sum();
    Index c = 0;
    while (c < m && ++idx[static_cast<size_t>(c)] == nodes) idx[static_cast<size_t>(c++)] = 0;
    if (c == m) break;
  }
  return acc;
}

Vector GpModel::predict_class_prob(const Vector& x, int samples) const {
  if (task_ == Task::Regression) throw std::logic_error("class probabilities requested from a regression model");
  const Posterior p = posterior_at(x);
  if (task_ == Task::BinaryClassification) {
    const double pi = binary_probability(link_, p.mean(0), p.covariance(0, 0));
    return Vector{{pi, 1.0 - pi}};
  }
  return samples > 0 ? softmax_probabilities(p.mean, p.covariance, samples, 0x9e3779b97f4a7c15ULL)
                     : softmax_probabilities(p.mean, p.covariance);
}

Index GpModel::predict_class(const Vector& x) const {
  if (task_ == Task::BinaryClassification) return predict_class_prob(x)(0) >= 0.5 ? 0 : 1;
  Index best = 0;
  predict_class_prob(x).maxCoeff(&best);
  return best;
}

GpModel fit_regression(const Matrix& inputs, const Vector& targets, const KernelSpec& kernel, double noise) {
  if (inputs.rows() < 1) throw std::invalid_argument("regression needs at least one point");
  if (targets.size() != inputs.rows()) throw std::invalid_argument("one target per input required");
  if (!(noise > 0.0)) throw std::invalid_argument("noise variance must be positive");
  kernel.validate();
  const Index n = inputs.rows();
  const Matrix k = gram(kernel, inputs) + noise * Matrix::Identity(n, n);
  for (double jitter = 0.0; jitter <= 1e-4 * 1.0001; jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0) {
    Eigen::LLT<Matrix> llt(k + jitter * Matrix::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    Matrix s = llt.solve(Matrix::Identity(n, n));
    s = 0.5 * (s + s.transpose());
    Matrix t = (s * targets).eval();
    return GpModel(Task::Regression, {kernel}, inputs, t, s, Link{}, noise);
  }
  throw std::runtime_error("Gram matrix factorization failed at maximum jitter");
}

GpModel fit_laplace_binary(const Matrix& inputs, const Vector& labels, const KernelSpec& kernel, Link link) {
  const Index n = inputs.rows();
  if (n < 1 || labels.size() != n) throw std::invalid_argument("one label per input required");
  bool pos = false, neg = false;
  for (Index i = 0; i < n; ++i) {
    if (labels(i) == 1.0) pos = true;
    else if (labels(i) == -1.0) neg = true;
    else throw std::invalid_argument("binary labels must be -1 or +1");
  }
  if (!pos || !neg) throw std::invalid_argument("both classes must be present");
  if (link.kind == Link::Kind::Softmax) throw std::invalid_argument("binary Laplace needs a probit or logistic link");
  kernel.validate();
  const Matrix k = gram(kernel, inputs);

  Vector f = Vector::Zero(n);
  Vector grad(n), w(n);
  auto evaluate = [&](const Vector& latent, Vector& g, Vector& nh) {
    double lp = 0.0;
    for (Index i = 0; i < n; ++i) {
      const LabelTerms t = label_terms(link, labels(i), latent(i));
      lp += t.log_p;
      g(i) = t.grad;
      nh(i) = t.neg_hess;
    }
    return lp;
  };

  // Psi(f) = log p(y | f) - 1/2 a'f with f = K a.
  Vector a = Vector::Zero(n);
  double psi = evaluate(f, grad, w);
  bool converged = false;
  for (int iter = 0; iter < 100 && !converged; ++iter) {
    const Vector sw = w.cwiseMax(0.0).cwiseSqrt();
    const Matrix b = Matrix::Identity(n, n) + sw.asDiagonal() * k * sw.asDiagonal();
    const Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw std::runtime_error("Laplace Newton step factorization failed");
    const Vector rhs = w.cwiseProduct(f) + grad;
    const Vector a_new = rhs - sw.cwiseProduct(llt.solve(sw.cwiseProduct(k * rhs)));

    // Step halving on the objective keeps the iteration monotone.
    Vector step_a = a_new - a;
    double scale = 1.0;
    Vector g_try(n), w_try(n), f_try, a_try;
    double psi_try = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 30; ++h) {
      a_try = a + scale * step_a;
      f_try = k * a_try;
      psi_try = evaluate(f_try, g_try, w_try) - 0.5 * a_try.dot(f_try);
      if (psi_try >= psi - 1e-12 * std::abs(psi)) break;
      scale *= 0.5;
    }
    const double change = (f_try - f).lpNorm<Eigen::Infinity>();
    converged = change < 1e-8;
    a = a_try;
    f = f_try;
    grad = g_try;
    w = w_try;
    psi = psi_try;
  }
  if (!converged) throw std::runtime_error("Laplace Newton iteration did not converge");

  const Vector sw = w.cwiseMax(0.0).cwiseSqrt();
  const Matrix b = Matrix::Identity(n, n) + sw.asDiagonal() * k * sw.asDiagonal();
  const Eigen::LLT<Matrix> llt(b);
  Matrix s = sw.asDiagonal() * llt.solve(Matrix(sw.asDiagonal()));
  s = 0.5 * (s + s.transpose());
  return GpModel(Task::BinaryClassification, {kernel}, inputs, Matrix(grad), s, link, 0.0);
}

}  // namespace gpcert
