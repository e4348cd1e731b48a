// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "gpcert/region.hpp"

namespace gpcert {

struct SymmetricEigen {
  Vector values;   ///< ascending
  Matrix vectors;  ///< columns are eigenvectors
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Stops when the
/// off-diagonal Frobenius norm drops below `tol` times the matrix norm.
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-12, int max_sweeps = 100);

struct GaussHermiteRule {
  Vector nodes;
  Vector weights;  ///< for the weight function exp(-t^2)
};

/// Gauss-Hermite rule with `n` nodes (cached per n).
const GaussHermiteRule& gauss_hermite(int n);

/// E[f(z)] for z ~ N(mean, variance) with the 64-node rule.
template <typename F>
double gaussian_expectation(F&& f, double mean, double variance) {
  const GaussHermiteRule& rule = gauss_hermite(64);
  const double scale = std::sqrt(2.0 * std::max(variance, 0.0));
  double s = 0.0;
  for (Index k = 0; k < rule.nodes.size(); ++k) s += rule.weights(k) * f(mean + scale * rule.nodes(k));
  return s / std::sqrt(3.14159265358979323846);
}

double normal_cdf(double z);
double normal_pdf(double z);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);
/// phi(z) / Phi(z), stable for very negative z.
double normal_hazard(double z);

}  // namespace gpcert
