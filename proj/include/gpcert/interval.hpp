// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace gpcert {

/// Closed interval of reals. Infinite end points are allowed; the product
/// convention 0 * inf = 0 keeps exact zeros exact.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT: implicit on purpose
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static Interval whole() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  double mid() const;
  double width() const { return hi - lo; }
  double mag() const;  ///< max |v| over the interval
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  bool contains_zero() const { return lo <= 0.0 && hi >= 0.0; }
  bool is_finite() const;

  Interval& operator+=(const Interval& o);
  Interval& operator-=(const Interval& o);
  Interval& operator*=(const Interval& o);
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
/// Throws std::domain_error if `b` contains zero.
Interval operator/(const Interval& a, const Interval& b);

Interval hull(const Interval& a, const Interval& b);
Interval intersect(const Interval& a, const Interval& b);
Interval sqr(const Interval& a);

std::ostream& operator<<(std::ostream& os, const Interval& v);

/// Dense interval matrix, row-major.
class IntervalMatrix {
 public:
  IntervalMatrix() = default;
  IntervalMatrix(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Interval& operator()(Eigen::Index i, Eigen::Index j) { return data_[i * cols_ + j]; }
  const Interval& operator()(Eigen::Index i, Eigen::Index j) const { return data_[i * cols_ + j]; }

  Eigen::MatrixXd mid() const;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<Interval> data_;
};

IntervalMatrix operator*(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix operator*(const Eigen::MatrixXd& a, const IntervalMatrix& b);

/// Encloses {A^-1 B : A in `a`, B in `b`} with interval Gaussian elimination
/// on the midpoint-preconditioned system. Throws std::domain_error when a
/// pivot interval contains zero.
IntervalMatrix interval_solve(const IntervalMatrix& a, const IntervalMatrix& b);

}  // namespace gpcert
