// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gpcert/kernels.hpp"
#include "gpcert/linalg.hpp"
#include "gpcert/region.hpp"

namespace gpcert {

enum class Task { Regression, BinaryClassification, MultiClass };

struct Link {
  enum class Kind { Probit, Logistic, Softmax } kind = Kind::Probit;
  double lambda = 1.0;  ///< probit slope: p(y | f) = Phi(lambda y f)
};

struct Posterior {
  Vector mean;        ///< one entry per latent output
  Matrix covariance;  ///< outputs x outputs
};

/// Posterior of a GP in the form
///   mean_c(x) = k_c(x, X) t_c
///   cov_cd(x) = [c == d] k_c(x, x) - k_c(x, X) S_cd k_d(x, X)'
/// which covers exact regression, the Laplace approximation and ingested
/// sparse or multi-class posteriors (X then holds the inducing points).
class GpModel {
 public:
  GpModel() = default;
  /// `kernels` holds one spec per output, or a single spec shared by all.
  GpModel(Task task, std::vector<KernelSpec> kernels, Matrix inputs, Matrix weights, Matrix posterior,
          Link link = {}, double noise = 0.0);

  Task task() const { return task_; }
  const Link& link() const { return link_; }
  double noise() const { return noise_; }
  Index outputs() const { return weights_.cols(); }
  Index size() const { return inputs_.rows(); }
  Index dim() const { return inputs_.cols(); }
  /// Number of classes reported to callers (2 for binary models).
  Index classes() const;

  const Matrix& inputs() const { return inputs_; }
  const Matrix& weights() const { return weights_; }
  const Matrix& posterior_matrix() const { return posterior_; }
  /// Diagonal block S_cc.
  Matrix posterior_block(Index c, Index d) const;

  const KernelSpec& kernel(Index c) const;
  const KernelDecomposition& decomposition(Index c) const;
  /// Eigendecomposition of S_cc, cached for models with at most 256 points.
  const SymmetricEigen* block_eigen(Index c) const;
  const std::vector<KernelSpec>& kernels() const { return kernels_; }

  /// k_c(x, X) as a row vector.
  template <typename Scalar>
  VectorX<Scalar> cross_kernel(Index c, const VectorX<Scalar>& x) const;

  template <typename Scalar>
  Scalar latent_mean(Index c, const VectorX<Scalar>& x) const {
    return cross_kernel<Scalar>(c, x).dot(weights_.col(c).cast<Scalar>());
  }

  Posterior posterior_at(const Vector& x) const;
  /// Class probabilities; binary models return {pi_1, 1 - pi_1}. Softmax
  /// models use tensor Gauss-Hermite quadrature, or a seeded Monte-Carlo
  /// estimate with `samples` draws when `samples` > 0.
  Vector predict_class_prob(const Vector& x, int samples = 0) const;
  /// Index of the most probable class (0-based).
  Index predict_class(const Vector& x) const;

 private:
  Task task_ = Task::Regression;
  std::vector<KernelSpec> kernels_;
  Matrix inputs_;
  Matrix weights_;
  Matrix posterior_;
  Link link_;
  double noise_ = 0.0;
  std::vector<std::shared_ptr<const KernelDecomposition>> decompositions_;
  std::vector<std::shared_ptr<const SymmetricEigen>> eigen_;
};

/// Exact regression: S = (K + noise I)^-1, t = S y. The Gram factorization
/// retries with jitter 1e-10, 1e-9, ..., 1e-4 before giving up.
GpModel fit_regression(const Matrix& inputs, const Vector& targets, const KernelSpec& kernel, double noise);

/// Laplace approximation for y in {-1, +1}: Newton iteration on the latent
/// mode (tolerance 1e-8, at most 100 steps), then t = grad log p(y | f) and
/// S = W^1/2 (I + W^1/2 K W^1/2)^-1 W^1/2.
GpModel fit_laplace_binary(const Matrix& inputs, const Vector& labels, const KernelSpec& kernel, Link link);

/// Binary class-1 probability for latent N(mean, variance).
double binary_probability(const Link& link, double mean, double variance);

/// Monte-Carlo softmax probabilities for a latent N(mean, cov).
Vector softmax_probabilities(const Vector& mean, const Matrix& cov, int samples, std::uint64_t seed);
/// Quadrature softmax probabilities (falls back to Monte Carlo for many
/// classes).
Vector softmax_probabilities(const Vector& mean, const Matrix& cov);

// ---------------------------------------------------------------------------

template <typename Scalar>
VectorX<Scalar> GpModel::cross_kernel(Index c, const VectorX<Scalar>& x) const {
  const KernelSpec& spec = kernel(c);
  VectorX<Scalar> k(size());
  for (Index i = 0; i < size(); ++i) k(i) = eval_kernel<Scalar>(spec, x, inputs_.row(i).transpose());
  return k;
}

}  // namespace gpcert
