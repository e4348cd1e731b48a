// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpcert/interval.hpp"
#include "gpcert/region.hpp"

namespace gpcert {

enum class KernelFamily {
  SquaredExponential,
  RationalQuadratic,
  Matern,
  Periodic,
  Sum,
  Product,
  SpectralStationary,
  SpectralNonStationary,
};

/// One summand of a spectral kernel. Stationary components use `theta` as
/// the precision of the squared-exponential envelope and `frequency` as the
/// cosine frequency. Non-stationary components use `theta` inside the
/// exponential-linear envelope and the two frequencies of the feature map.
struct SpectralComponent {
  double variance = 1.0;
  Vector theta;
  Vector frequency;
  Vector frequency2;
};

/// Covariance function description. `theta` holds the per-dimension
/// coefficients of the inner function: for the squared exponential
/// k = variance * exp(-sum theta_j (x_j - y_j)^2).
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  double variance = 1.0;
  Vector theta;
  Vector period;  ///< periodic frequencies p_j
  double alpha = 1.0;
  int order = 1;  ///< Matern smoothness nu = order + 1/2
  std::vector<KernelSpec> children;
  std::vector<double> weights;
  std::vector<SpectralComponent> components;

  static KernelSpec squared_exponential(double variance, Vector theta);
  static KernelSpec rational_quadratic(double variance, Vector theta, double alpha);
  static KernelSpec matern(double variance, Vector theta, int order);
  static KernelSpec periodic(double variance, Vector theta, Vector period);
  static KernelSpec sum(std::vector<KernelSpec> children, std::vector<double> weights);
  static KernelSpec product(std::vector<KernelSpec> children);
  static KernelSpec spectral_stationary(std::vector<SpectralComponent> components);
  static KernelSpec spectral_nonstationary(std::vector<SpectralComponent> components);

  /// Input dimension; throws if children disagree.
  Index input_dim() const;
  /// Throws std::invalid_argument on non-positive parameters or bad shapes.
  void validate() const;
  bool stationary() const;
};

// ---------------------------------------------------------------------------
// Direct kernel formulas, templated so that AutoDiff scalars can flow through
// the first argument.

template <typename Scalar>
Scalar eval_kernel(const KernelSpec& spec, const VectorX<Scalar>& x, const Vector& y);

inline double eval_kernel(const KernelSpec& spec, const Vector& x, const Vector& y) {
  return eval_kernel<double>(spec, x, y);
}

// ---------------------------------------------------------------------------
// One-dimensional profiles psi and their linear bounds.

struct LinearBoundPair {
  double a_lower = 0.0;
  double b_lower = 0.0;
  double a_upper = 0.0;
  double b_upper = 0.0;

  double lower(double v) const { return a_lower + b_lower * v; }
  double upper(double v) const { return a_upper + b_upper * v; }
};

struct PhiRange {
  double lower = 0.0;
  double upper = 0.0;
};

/// Scalar function of one variable with known curvature structure.
struct Profile {
  enum class Kind {
    Exponential,        ///< scale * exp(rate * v)
    RationalQuadratic,  ///< scale * (1 + v/2)^-alpha
    Matern,             ///< scale * exp(-c s) P(s), s = sqrt(v)
    Cosine,             ///< scale * cos(v)
    Affine,             ///< scale * v + shift
    Quadratic,          ///< scale * (v - shift)^2
    SineSquared,        ///< scale * sin^2(rate * (v - shift))
  };

  Kind kind = Kind::Affine;
  double scale = 1.0;
  double rate = 1.0;
  double shift = 0.0;
  double alpha = 1.0;
  int order = 1;

  static Profile exponential(double scale, double rate) { return {Kind::Exponential, scale, rate}; }
  static Profile rational_quadratic(double scale, double alpha) {
    Profile p{Kind::RationalQuadratic, scale};
    p.alpha = alpha;
    return p;
  }
  static Profile matern(double scale, int order) {
    Profile p{Kind::Matern, scale};
    p.order = order;
    return p;
  }
  static Profile cosine(double scale) { return {Kind::Cosine, scale}; }
  static Profile affine(double scale, double shift) { return {Kind::Affine, scale, 1.0, shift}; }
  static Profile quadratic(double scale, double shift) { return {Kind::Quadratic, scale, 1.0, shift}; }
  static Profile sine_squared(double scale, double rate, double shift) { return {Kind::SineSquared, scale, rate, shift}; }

  double value(double v) const;
  double slope(double v) const;
  double curvature(double v) const;
  /// Curvature sign changes strictly inside (lo, hi), ascending.
  std::vector<double> inflections(double lo, double hi) const;
  /// Exact range of the profile over [lo, hi].
  Interval range(double lo, double hi) const;
};

/// Linear lower and upper bounding functions of `psi` valid on [lo, hi].
LinearBoundPair build_lbf_ubf(const Profile& psi, double lo, double hi);

// ---------------------------------------------------------------------------
// Inner functions phi(x, y), separable across dimensions.

struct PhiFunction {
  enum class Kind {
    Quadratic,  ///< sum theta_j (x_j - y_j)^2
    Periodic,   ///< sum theta_j sin^2(p_j (x_j - y_j))
    Linear,     ///< sum coef_x_j x_j + coef_y_j y_j
  };

  Kind kind = Kind::Quadratic;
  Vector theta;
  Vector period;
  Vector coef_x;
  Vector coef_y;

  static PhiFunction quadratic(Vector theta) {
    PhiFunction f;
    f.theta = std::move(theta);
    return f;
  }
  static PhiFunction periodic(Vector theta, Vector period) {
    PhiFunction f;
    f.kind = Kind::Periodic;
    f.theta = std::move(theta);
    f.period = std::move(period);
    return f;
  }
  static PhiFunction linear(Vector coef_x, Vector coef_y) {
    PhiFunction f;
    f.kind = Kind::Linear;
    f.coef_x = std::move(coef_x);
    f.coef_y = std::move(coef_y);
    return f;
  }

  Index dim() const { return kind == Kind::Linear ? coef_x.size() : theta.size(); }

  template <typename Scalar>
  Scalar value(const VectorX<Scalar>& x, const Vector& y) const;
  double value(const Vector& x, const Vector& y) const { return value<double>(x, y); }

  /// The dimension-j term as a profile in x_j for fixed anchor coordinate y_j.
  Profile component(Index j, double y_j) const;

  /// U(c) >= sup over the region of sum_i c_i phi(x, anchors.row(i)).
  /// When `argmax` is given it receives a point of the region attaining (or,
  /// for periodic phi, approximating) the supremum.
  double upper_bound(const Vector& coeffs, const Matrix& anchors, const Region& region, Vector* argmax = nullptr) const;

  PhiRange range(const Vector& anchor, const Region& region) const;
  /// Range of phi(x, x) over the region (used for non-stationary diagonals).
  Interval diagonal_range(const Region& region) const;
};

/// Upper bound on the supremum over the region of
/// sum_k sum_i coeffs(i, k) phi_k(x, anchors.row(i)), taken jointly over the
/// atoms rather than one atom at a time. Each dimension is bounded exactly
/// when it carries no periodic term, and otherwise by `samples` evenly spaced
/// evaluations plus a curvature allowance.
double joint_upper_bound(const std::vector<const PhiFunction*>& phis, const Matrix& coeffs, const Matrix& anchors,
                         const Region& region, Vector* argmax = nullptr, int samples = 65);

/// A leaf of the kernel decomposition: k = psi(phi(x, y)).
struct Atom {
  PhiFunction phi;
  Profile psi;
};

/// Linear sandwich of a composite kernel in the atom inner functions:
/// a_lower + b_lower . phi <= k <= a_upper + b_upper . phi, where phi stacks
/// the inner function of every atom. `value` encloses k on the region.
struct AffineBound {
  double a_lower = 0.0;
  Vector b_lower;
  double a_upper = 0.0;
  Vector b_upper;
  Interval value;

  double lower_at(const Vector& phi) const { return a_lower + b_lower.dot(phi); }
  double upper_at(const Vector& phi) const { return a_upper + b_upper.dot(phi); }
};

/// Per-atom data for one anchor on one region.
struct AtomBound {
  PhiRange phi;
  LinearBoundPair psi;
  /// Linear bounds of each phi_j term in x_j and the term's range; filled on
  /// request because only the variance programs need them.
  std::vector<LinearBoundPair> dims;
  std::vector<PhiRange> dim_ranges;
};

struct AnchorBound {
  AffineBound kernel;
  std::vector<AtomBound> atoms;
};

/// k' g' + k'' g'' for nonnegative weights.
AffineBound compose_bounds_sum(const AffineBound& first, const AffineBound& second, double k1, double k2);

/// McCormick envelope of the product of two factors. `atom_ranges` are the
/// inner-function ranges used to intersect the product enclosure with the
/// extrema of the resulting affine bounds; pass an empty vector to skip.
AffineBound compose_bounds_product(const AffineBound& first, const AffineBound& second,
                                   const std::vector<PhiRange>& atom_ranges = {});

/// Extrema of a + b . phi over the box of atom ranges.
Interval affine_extrema(double a, const Vector& b, const std::vector<PhiRange>& ranges);

/// A kernel flattened into atoms joined by weighted sums and products.
class KernelDecomposition {
 public:
  explicit KernelDecomposition(const KernelSpec& spec);

  Index dim() const { return dim_; }
  Index atom_count() const { return static_cast<Index>(atoms_.size()); }
  const Atom& atom(Index k) const { return atoms_[static_cast<size_t>(k)]; }
  bool stationary() const { return stationary_; }

  /// psi(phi(x, y)) composed through the tree; agrees with eval_kernel.
  double evaluate(const Vector& x, const Vector& y) const;

  AnchorBound bound(const Vector& anchor, const Region& region, bool with_dims) const;

  /// Enclosure of k(x, x) for x in the region.
  Interval diagonal_range(const Region& region) const;

 private:
  struct Node {
    enum class Kind { Leaf, Sum, Product } kind = Kind::Leaf;
    Index atom = -1;
    std::vector<Node> children;
    std::vector<double> weights;
  };

  Node build(const KernelSpec& spec);
  Node leaf(PhiFunction phi, Profile psi);
  double evaluate(const Node& node, const std::vector<double>& atom_values) const;
  AffineBound bound(const Node& node, const std::vector<AtomBound>& atoms, const std::vector<PhiRange>& ranges) const;
  Interval diagonal(const Node& node, const std::vector<Interval>& atom_values) const;

  Index dim_ = 0;
  bool stationary_ = true;
  std::vector<Atom> atoms_;
  Node root_;
};

// ---------------------------------------------------------------------------
// Convenience forms for single-atom kernel families.

PhiRange phi_range(const KernelSpec& spec, const Vector& anchor, const Region& region);
LinearBoundPair build_lbf_ubf(const KernelSpec& spec, const Vector& anchor, const Region& region);
double upper_bounding_U(const KernelSpec& spec, const Vector& coeffs, const Matrix& anchors, const Region& region);

// ---------------------------------------------------------------------------
// Template definitions.

template <typename Scalar>
Scalar PhiFunction::value(const VectorX<Scalar>& x, const Vector& y) const {
  using std::sin;
  Scalar s(0.0);
  switch (kind) {
    case Kind::Quadratic:
      for (Index j = 0; j < x.size(); ++j) {
        const Scalar d = x(j) - y(j);
        s += theta(j) * d * d;
      }
      break;
    case Kind::Periodic:
      for (Index j = 0; j < x.size(); ++j) {
        const Scalar v = sin(period(j) * (x(j) - y(j)));
        s += theta(j) * v * v;
      }
      break;
    case Kind::Linear:
      for (Index j = 0; j < x.size(); ++j) s += coef_x(j) * x(j) + coef_y(j) * y(j);
      break;
  }
  return s;
}

namespace detail {

/// Matern polynomial P(s) for nu = p + 1/2 (with the leading exp removed).
std::vector<double> matern_polynomial(int order);

template <typename Scalar>
Scalar matern_value(double variance, int order, const Scalar& phi) {
  using std::exp;
  using std::sqrt;
  if (phi <= 0.0) return Scalar(variance) + 0.0 * phi;
  const Scalar s = sqrt(phi);
  const double c = std::sqrt(2.0 * order + 1.0);
  const std::vector<double> poly = matern_polynomial(order);
  Scalar p(0.0);
  for (size_t k = poly.size(); k-- > 0;) p = p * s + poly[k];
  return variance * exp(-c * s) * p;
}

}  // namespace detail

template <typename Scalar>
Scalar eval_kernel(const KernelSpec& spec, const VectorX<Scalar>& x, const Vector& y) {
  using std::cos;
  using std::exp;
  using std::pow;
  if (x.size() != y.size() || y.size() != spec.input_dim())
    throw std::invalid_argument("kernel inputs differ in dimension");
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return spec.variance * exp(-PhiFunction::quadratic(spec.theta).value<Scalar>(x, y));
    case KernelFamily::RationalQuadratic:
      return spec.variance * pow(1.0 + 0.5 * PhiFunction::quadratic(spec.theta).value<Scalar>(x, y), -spec.alpha);
    case KernelFamily::Matern:
      return detail::matern_value<Scalar>(spec.variance, spec.order, PhiFunction::quadratic(spec.theta).value<Scalar>(x, y));
    case KernelFamily::Periodic:
      return spec.variance * exp(-0.5 * PhiFunction::periodic(spec.theta, spec.period).value<Scalar>(x, y));
    case KernelFamily::Sum: {
      Scalar s(0.0);
      for (size_t c = 0; c < spec.children.size(); ++c) s += spec.weights[c] * eval_kernel<Scalar>(spec.children[c], x, y);
      return s;
    }
    case KernelFamily::Product: {
      Scalar s(1.0);
      for (const auto& child : spec.children) s *= eval_kernel<Scalar>(child, x, y);
      return s;
    }
    case KernelFamily::SpectralStationary: {
      Scalar s(0.0);
      for (const auto& comp : spec.components) {
        Scalar arg(0.0);
        for (Index j = 0; j < x.size(); ++j) arg += comp.frequency(j) * (x(j) - y(j));
        s += comp.variance * exp(-PhiFunction::quadratic(comp.theta).value<Scalar>(x, y)) * cos(arg);
      }
      return s;
    }
    case KernelFamily::SpectralNonStationary: {
      using std::sin;
      Scalar s(0.0);
      for (const auto& comp : spec.components) {
        Scalar env(0.0);
        for (Index j = 0; j < x.size(); ++j) env += comp.theta(j) * (x(j) + y(j));
        const Scalar xa = x.dot(comp.frequency.cast<Scalar>());
        const Scalar xb = x.dot(comp.frequency2.cast<Scalar>());
        const double ya = y.dot(comp.frequency);
        const double yb = y.dot(comp.frequency2);
        const Scalar feature = (cos(xa) + cos(xb)) * (std::cos(ya) + std::cos(yb)) +
                               (sin(xa) + sin(xb)) * (std::sin(ya) + std::sin(yb));
        s += comp.variance * exp(env) * feature;
      }
      return s;
    }
  }
  throw std::logic_error("unknown kernel family");
}

}  // namespace gpcert
