// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gpcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Axis-aligned box [lower, upper] in input space.
class Region {
 public:
  Region() = default;
  Region(Vector lower, Vector upper);

  static Region point(const Vector& x);
  /// Box of half-width `radius` around `center` (the l-inf ball).
  static Region box(const Vector& center, double radius);

  Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double lower(Index j) const { return lower_(j); }
  double upper(Index j) const { return upper_(j); }

  Vector center() const { return 0.5 * (lower_ + upper_); }
  Vector width() const { return upper_ - lower_; }
  double diameter() const;
  bool is_point() const { return diameter() == 0.0; }

  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;
  bool contains(const Region& other) const;

  /// Halves the box at the midpoint of dimension `j`.
  std::pair<Region, Region> split(Index j) const;

 private:
  Vector lower_;
  Vector upper_;
};

}  // namespace gpcert
