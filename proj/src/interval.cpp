// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/interval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace gpcert {
namespace {

double mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

}  // namespace

double Interval::mid() const {
  if (std::isinf(lo) && std::isinf(hi)) return 0.0;
  if (std::isinf(lo)) return hi;
  if (std::isinf(hi)) return lo;
  return 0.5 * (lo + hi);
}

double Interval::mag() const { return std::max(std::abs(lo), std::abs(hi)); }

bool Interval::is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }

Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }

Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
Interval operator-(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }
Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

Interval operator*(const Interval& a, const Interval& b) {
  const double p[4] = {mul(a.lo, b.lo), mul(a.lo, b.hi), mul(a.hi, b.lo), mul(a.hi, b.hi)};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) throw std::domain_error("interval division by an interval containing zero");
  return a * Interval(1.0 / b.hi, 1.0 / b.lo);
}

Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

Interval intersect(const Interval& a, const Interval& b) {
  Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  // Enclosures of the same quantity can miss each other by rounding only.
  if (r.lo > r.hi) r.lo = r.hi = 0.5 * (r.lo + r.hi);
  return r;
}

Interval sqr(const Interval& a) {
  const double l = mul(a.lo, a.lo);
  const double h = mul(a.hi, a.hi);
  if (a.contains_zero()) return {0.0, std::max(l, h)};
  return {std::min(l, h), std::max(l, h)};
}

std::ostream& operator<<(std::ostream& os, const Interval& v) { return os << '[' << v.lo << ", " << v.hi << ']'; }

Eigen::MatrixXd IntervalMatrix::mid() const {
  Eigen::MatrixXd m(rows_, cols_);
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).mid();
  return m;
}

IntervalMatrix operator*(const IntervalMatrix& a, const IntervalMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("interval matrix product dimension mismatch");
  IntervalMatrix c(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Interval s(0.0);
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

IntervalMatrix operator*(const Eigen::MatrixXd& a, const IntervalMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("interval matrix product dimension mismatch");
  IntervalMatrix c(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Interval s(0.0);
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += Interval(a(i, k)) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

IntervalMatrix interval_solve(const IntervalMatrix& a, const IntervalMatrix& b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("interval_solve dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!a(i, j).is_finite()) throw std::domain_error("interval_solve needs a finite matrix");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a.mid());
  if (!lu.isInvertible()) throw std::domain_error("midpoint matrix is singular");
  const Eigen::MatrixXd precond = lu.inverse();
  IntervalMatrix m = precond * a;
  IntervalMatrix rhs = precond * b;

  for (Eigen::Index k = 0; k < n; ++k) {
    const Interval pivot = m(k, k);
    if (pivot.contains_zero()) throw std::domain_error("interval pivot contains zero");
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const Interval factor = m(i, k) / pivot;
      for (Eigen::Index j = k + 1; j < n; ++j) m(i, j) -= factor * m(k, j);
      for (Eigen::Index j = 0; j < rhs.cols(); ++j) rhs(i, j) -= factor * rhs(k, j);
      m(i, k) = Interval(0.0);
    }
  }
  IntervalMatrix x(n, rhs.cols());
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
      Interval s = rhs(i, j);
      for (Eigen::Index k = i + 1; k < n; ++k) s -= m(i, k) * x(k, j);
      x(i, j) = s / m(i, i);
    }
  }
  return x;
}

}  // namespace gpcert
