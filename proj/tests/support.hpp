// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0
//
// Random instances and grid oracles shared by the tests.

#pragma once

#include <cmath>
#include <initializer_list>
#include <random>
#include <vector>

#include "gpcert/gp_model.hpp"
#include "gpcert/kernels.hpp"
#include "gpcert/region.hpp"

namespace gpcert::testing {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector uniform_vector(std::mt19937_64& rng, Index d, double lo, double hi) {
  Vector v(d);
  for (Index j = 0; j < d; ++j) v(j) = uniform(rng, lo, hi);
  return v;
}

enum class Family { SE, RQ, Matern32, Periodic, Sum, Product };

inline KernelSpec random_kernel(std::mt19937_64& rng, Index d, Family f) {
  auto theta = [&] { return uniform_vector(rng, d, 0.3, 2.0); };
  switch (f) {
    case Family::SE:
      return KernelSpec::squared_exponential(uniform(rng, 0.5, 2.0), theta());
    case Family::RQ:
      return KernelSpec::rational_quadratic(uniform(rng, 0.5, 2.0), theta(), uniform(rng, 0.5, 3.0));
    case Family::Matern32:
      return KernelSpec::matern(uniform(rng, 0.5, 2.0), theta(), 1);
    case Family::Periodic:
      return KernelSpec::periodic(uniform(rng, 0.5, 2.0), theta(), uniform_vector(rng, d, 0.5, 2.0));
    case Family::Sum:
      return KernelSpec::sum({random_kernel(rng, d, Family::SE), random_kernel(rng, d, Family::Matern32)},
                             {uniform(rng, 0.2, 1.0), uniform(rng, 0.2, 1.0)});
    case Family::Product:
      return KernelSpec::product({random_kernel(rng, d, Family::SE), random_kernel(rng, d, Family::Periodic)});
  }
  return {};
}

inline Family family_at(int k) { return static_cast<Family>(k % 6); }

inline Matrix random_inputs(std::mt19937_64& rng, Index n, Index d, double lo = -2.0, double hi = 2.0) {
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) x.row(i) = uniform_vector(rng, d, lo, hi).transpose();
  return x;
}

/// Laplace model on labels given by the sign of a random linear score, with
/// both classes forced present.
inline GpModel random_binary_model(std::mt19937_64& rng, Index n, Index d, const KernelSpec& kernel, Link link) {
  const Matrix x = random_inputs(rng, n, d);
  const Vector w = uniform_vector(rng, d, -1.0, 1.0);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = x.row(i).dot(w) + uniform(rng, -0.5, 0.5) >= 0.0 ? 1.0 : -1.0;
  y(0) = 1.0;
  y(n - 1) = -1.0;
  return fit_laplace_binary(x, y, kernel, link);
}

inline GpModel random_regression_model(std::mt19937_64& rng, Index n, Index d, const KernelSpec& kernel) {
  const Matrix x = random_inputs(rng, n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = std::sin(1.3 * x(i, 0)) + uniform(rng, -0.3, 0.3);
  return fit_regression(x, y, kernel, uniform(rng, 0.05, 0.3));
}

inline Region random_region(std::mt19937_64& rng, Index d, double max_width) {
  const Vector c = uniform_vector(rng, d, -1.5, 1.5);
  const Vector w = uniform_vector(rng, d, 0.1 * max_width, max_width);
  return Region(c - 0.5 * w, c + 0.5 * w);
}

/// Tensor grid with about `total` points (at least 2 per dimension).
inline std::vector<Vector> grid(const Region& r, long total) {
  const Index d = r.dim();
  const long per = std::max(2L, static_cast<long>(std::floor(std::pow(static_cast<double>(total), 1.0 / d) + 1e-9)));
  std::vector<Vector> pts;
  std::vector<long> idx(static_cast<size_t>(d), 0);
  while (true) {
    Vector x(d);
    for (Index j = 0; j < d; ++j)
      x(j) = r.lower(j) + (r.upper(j) - r.lower(j)) * static_cast<double>(idx[static_cast<size_t>(j)]) / (per - 1);
    pts.push_back(x);
    Index j = 0;
    while (j < d && ++idx[static_cast<size_t>(j)] == per) idx[static_cast<size_t>(j++)] = 0;
    if (j == d) break;
  }
  return pts;
}

}  // namespace gpcert::testing
