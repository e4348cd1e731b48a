// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gpcert {

namespace {

// Box-Muller on the engine output, so files do not depend on the standard
// library's normal_distribution.
double standard_normal(std::mt19937_64& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * kScale;
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Dataset draw(Index n, double shift, std::mt19937_64& rng) {
  Dataset d{Matrix(n, 2), Vector(n)};
  const Index first = n - n / 2;
  for (Index i = 0; i < n; ++i) {
    const bool one = i < first;
    d.inputs(i, 0) = standard_normal(rng) + (one ? shift : 0.0);
    d.inputs(i, 1) = standard_normal(rng) + (one ? 0.0 : shift);
    d.labels(i) = one ? 1.0 : 2.0;
  }
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  Dataset out{Matrix(n, 2), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    out.inputs.row(i) = d.inputs.row(order[static_cast<size_t>(i)]);
    out.labels(i) = d.labels(order[static_cast<size_t>(i)]);
  }
  return out;
}

}  // namespace

SyntheticSplit make_synthetic2d(Index n_train, Index n_test, std::uint64_t seed, double shift) {
  if (n_train < 2 || n_test < 2) throw std::invalid_argument("each split needs at least two points");
  std::mt19937_64 rng(seed);
  SyntheticSplit s;
  s.train = draw(n_train, shift, rng);
  s.test = draw(n_test, shift, rng);
  return s;
}

Vector to_signed_labels(const Vector& labels) {
  Vector y(labels.size());
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1.0) {
      y(i) = 1.0;
    } else if (labels(i) == 2.0) {
      y(i) = -1.0;
    } else {
      throw std::invalid_argument("labels must be 1 or 2");
    }
  }
  return y;
}

}  // namespace gpcert
