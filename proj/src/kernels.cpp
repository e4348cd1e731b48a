// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/kernels.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numbers>

namespace gpcert {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr size_t kMaxSegments = 1000;

void require_positive(const Vector& v, const char* what) {
  for (Index j = 0; j < v.size(); ++j)
    if (!(v(j) > 0.0) || !std::isfinite(v(j))) throw std::invalid_argument(std::string(what) + " must be positive");
}

// Points off + k*step (k integer) strictly inside (lo, hi). Returns false if
// there are more than `cap` of them.
bool lattice_points(double off, double step, double lo, double hi, size_t cap, std::vector<double>& out) {
  if (!(step > 0.0)) return true;
  const double k0 = std::ceil((lo - off) / step);
  const double k1 = std::floor((hi - off) / step);
  if (k1 - k0 + 1 > static_cast<double>(cap)) return false;
  for (double k = k0; k <= k1; k += 1.0) {
    const double v = off + k * step;
    if (v > lo && v < hi) out.push_back(v);
  }
  return true;
}

// Sign changes of f on (lo, hi), located by sampling then bisection.
std::vector<double> sign_changes(const std::function<double(double)>& f, double lo, double hi) {
  std::vector<double> roots;
  constexpr int kSamples = 64;
  double prev_x = lo;
  double prev_f = f(lo);
  for (int k = 1; k <= kSamples; ++k) {
    const double x = lo + (hi - lo) * k / kSamples;
    const double fx = f(x);
    if ((prev_f < 0.0 && fx > 0.0) || (prev_f > 0.0 && fx < 0.0)) {
      double a = prev_x, b = x, fa = prev_f;
      while (b - a > 1e-12 * std::max(1.0, std::abs(a))) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double r = 0.5 * (a + b);
      if (r > lo && r < hi) roots.push_back(r);
    }
    prev_x = x;
    prev_f = fx;
  }
  return roots;
}

struct MaternCoefficients {
  double c;
  std::vector<double> p;  // P(s)
  std::vector<double> e;  // E(s) = (P' - cP)(s) / s
};

MaternCoefficients matern_coefficients(int order) {
  MaternCoefficients m;
  m.c = std::sqrt(2.0 * order + 1.0);
  m.p = detail::matern_polynomial(order);
  const size_t n = m.p.size();
  std::vector<double> d(n, 0.0);
  for (size_t k = 0; k < n; ++k) d[k] = (k + 1 < n ? (k + 1) * m.p[k + 1] : 0.0) - m.c * m.p[k];
  m.e.assign(d.begin() + 1, d.end());
  if (m.e.empty()) m.e.push_back(0.0);
  return m;
}

double horner(const std::vector<double>& poly, double s) {
  double v = 0.0;
  for (size_t k = poly.size(); k-- > 0;) v = v * s + poly[k];
  return v;
}

double horner_derivative(const std::vector<double>& poly, double s) {
  double v = 0.0;
  for (size_t k = poly.size(); k-- > 1;) v = v * s + k * poly[k];
  return v;
}

LinearBoundPair tangent_and_chord(const Profile& psi, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double t_b = psi.slope(mid);
  const double t_a = psi.value(mid) - t_b * mid;
  const double c_b = (psi.value(hi) - psi.value(lo)) / (hi - lo);
  const double c_a = psi.value(lo) - c_b * lo;
  if (psi.curvature(mid) >= 0.0) return {t_a, t_b, c_a, c_b};
  return {c_a, c_b, t_a, t_b};
}

// Line through (x0, y0) and (x1, y1).
void line_through(double x0, double y0, double x1, double y1, double& a, double& b) {
  b = (y1 - y0) / (x1 - x0);
  a = y0 - b * x0;
}

AffineBound scaled(const AffineBound& g, double s, bool lower_side) {
  // Bound of s * k for the requested side.
  AffineBound r;
  const bool keep = s >= 0.0;
  if (lower_side) {
    r.a_lower = s * (keep ? g.a_lower : g.a_upper);
    r.b_lower = s * (keep ? g.b_lower : g.b_upper);
  } else {
    r.a_upper = s * (keep ? g.a_upper : g.a_lower);
    r.b_upper = s * (keep ? g.b_upper : g.b_lower);
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// KernelSpec

KernelSpec KernelSpec::squared_exponential(double variance, Vector theta) {
  KernelSpec k;
  k.family = KernelFamily::SquaredExponential;
  k.variance = variance;
  k.theta = std::move(theta);
  return k;
}

KernelSpec KernelSpec::rational_quadratic(double variance, Vector theta, double alpha) {
  KernelSpec k = squared_exponential(variance, std::move(theta));
  k.family = KernelFamily::RationalQuadratic;
  k.alpha = alpha;
  return k;
}

KernelSpec KernelSpec::matern(double variance, Vector theta, int order) {
  KernelSpec k = squared_exponential(variance, std::move(theta));
  k.family = KernelFamily::Matern;
  k.order = order;
  return k;
}

KernelSpec KernelSpec::periodic(double variance, Vector theta, Vector period) {
  KernelSpec k = squared_exponential(variance, std::move(theta));
  k.family = KernelFamily::Periodic;
  k.period = std::move(period);
  return k;
}

KernelSpec KernelSpec::sum(std::vector<KernelSpec> children, std::vector<double> weights) {
  KernelSpec k;
  k.family = KernelFamily::Sum;
  k.children = std::move(children);
  k.weights = std::move(weights);
  return k;
}

KernelSpec KernelSpec::product(std::vector<KernelSpec> children) {
  KernelSpec k;
  k.family = KernelFamily::Product;
  k.children = std::move(children);
  return k;
}

KernelSpec KernelSpec::spectral_stationary(std::vector<SpectralComponent> components) {
  KernelSpec k;
  k.family = KernelFamily::SpectralStationary;
  k.components = std::move(components);
  return k;
}

KernelSpec KernelSpec::spectral_nonstationary(std::vector<SpectralComponent> components) {
  KernelSpec k;
  k.family = KernelFamily::SpectralNonStationary;
  k.components = std::move(components);
  return k;
}

Index KernelSpec::input_dim() const {
  switch (family) {
    case KernelFamily::Sum:
    case KernelFamily::Product: {
      if (children.empty()) throw std::invalid_argument("composite kernel without children");
      const Index d = children.front().input_dim();
      for (const auto& c : children)
        if (c.input_dim() != d) throw std::invalid_argument("kernel children differ in input dimension");
      return d;
    }
    case KernelFamily::SpectralStationary:
    case KernelFamily::SpectralNonStationary:
      if (components.empty()) throw std::invalid_argument("spectral kernel without components");
      return components.front().theta.size();
    default:
      return theta.size();
  }
}

void KernelSpec::validate() const {
  const Index d = input_dim();
  if (d <= 0) throw std::invalid_argument("kernel input dimension must be positive");
  switch (family) {
    case KernelFamily::SquaredExponential:
    case KernelFamily::RationalQuadratic:
    case KernelFamily::Matern:
    case KernelFamily::Periodic:
      if (!(variance > 0.0)) throw std::invalid_argument("kernel variance must be positive");
      require_positive(theta, "kernel theta");
      if (family == KernelFamily::RationalQuadratic && !(alpha > 0.0))
        throw std::invalid_argument("rational quadratic alpha must be positive");
      if (family == KernelFamily::Matern && order < 1)
        throw std::invalid_argument("Matern order must be at least 1 (nu >= 3/2)");
      if (family == KernelFamily::Periodic) {
        if (period.size() != d) throw std::invalid_argument("periodic frequencies must match input dimension");
        require_positive(period, "periodic frequency");
      }
      break;
    case KernelFamily::Sum:
      if (weights.size() != children.size()) throw std::invalid_argument("sum kernel needs one weight per child");
      for (double w : weights)
        if (!(w >= 0.0)) throw std::invalid_argument("sum kernel weights must be nonnegative");
      for (const auto& c : children) c.validate();
      break;
    case KernelFamily::Product:
      for (const auto& c : children) c.validate();
      break;
    case KernelFamily::SpectralStationary:
    case KernelFamily::SpectralNonStationary:
      for (const auto& c : components) {
        if (!(c.variance > 0.0)) throw std::invalid_argument("spectral component variance must be positive");
        if (c.theta.size() != d || c.frequency.size() != d)
          throw std::invalid_argument("spectral component shape mismatch");
        require_positive(c.theta, "spectral theta");
        if (family == KernelFamily::SpectralNonStationary && c.frequency2.size() != d)
          throw std::invalid_argument("non-stationary component needs two frequencies");
      }
      break;
  }
}

bool KernelSpec::stationary() const {
  switch (family) {
    case KernelFamily::SpectralNonStationary:
      return false;
    case KernelFamily::Sum:
    case KernelFamily::Product:
      return std::all_of(children.begin(), children.end(), [](const KernelSpec& c) { return c.stationary(); });
    default:
      return true;
  }
}

namespace detail {

std::vector<double> matern_polynomial(int order) {
  // P(s) = p!/(2p)! sum_l (p+l)!/(l!(p-l)!) (2cs)^(p-l)
  const int p = order;
  const double c = std::sqrt(2.0 * p + 1.0);
  std::vector<double> poly(static_cast<size_t>(p) + 1, 0.0);
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  for (int l = 0; l <= p; ++l) {
    const double coef = fact(p) / fact(2 * p) * fact(p + l) / (fact(l) * fact(p - l));
    poly[static_cast<size_t>(p - l)] = coef * std::pow(2.0 * c, p - l);
  }
  return poly;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Profile

double Profile::value(double v) const {
  switch (kind) {
    case Kind::Exponential:
      return scale * std::exp(rate * v);
    case Kind::RationalQuadratic:
      return scale * std::pow(1.0 + 0.5 * v, -alpha);
    case Kind::Matern:
      return detail::matern_value<double>(scale, order, v);
    case Kind::Cosine:
      return scale * std::cos(v);
    case Kind::Affine:
      return scale * v + shift;
    case Kind::Quadratic:
      return scale * (v - shift) * (v - shift);
    case Kind::SineSquared: {
      const double s = std::sin(rate * (v - shift));
      return scale * s * s;
    }
  }
  return 0.0;
}

double Profile::slope(double v) const {
  switch (kind) {
    case Kind::Exponential:
      return scale * rate * std::exp(rate * v);
    case Kind::RationalQuadratic:
      return -0.5 * scale * alpha * std::pow(1.0 + 0.5 * v, -alpha - 1.0);
    case Kind::Matern: {
      const MaternCoefficients m = matern_coefficients(order);
      const double s = std::sqrt(std::max(v, 0.0));
      return 0.5 * scale * std::exp(-m.c * s) * horner(m.e, s);
    }
    case Kind::Cosine:
      return -scale * std::sin(v);
    case Kind::Affine:
      return scale;
    case Kind::Quadratic:
      return 2.0 * scale * (v - shift);
    case Kind::SineSquared:
      return scale * rate * std::sin(2.0 * rate * (v - shift));
  }
  return 0.0;
}

double Profile::curvature(double v) const {
  switch (kind) {
    case Kind::Exponential:
      return scale * rate * rate * std::exp(rate * v);
    case Kind::RationalQuadratic:
      return 0.25 * scale * alpha * (alpha + 1.0) * std::pow(1.0 + 0.5 * v, -alpha - 2.0);
    case Kind::Matern: {
      const MaternCoefficients m = matern_coefficients(order);
      const double s = std::sqrt(std::max(v, 0.0));
      const double f = horner_derivative(m.e, s) - m.c * horner(m.e, s);
      if (s == 0.0) return f == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), scale * f);
      return 0.25 * scale * std::exp(-m.c * s) * f / s;
    }
    case Kind::Cosine:
      return -scale * std::cos(v);
    case Kind::Affine:
      return 0.0;
    case Kind::Quadratic:
      return 2.0 * scale;
    case Kind::SineSquared:
      return 2.0 * scale * rate * rate * std::cos(2.0 * rate * (v - shift));
  }
  return 0.0;
}

std::vector<double> Profile::inflections(double lo, double hi) const {
  std::vector<double> pts;
  if (!(hi > lo)) return pts;
  switch (kind) {
    case Kind::Cosine:
      if (!lattice_points(kPi / 2, kPi, lo, hi, kMaxSegments, pts)) pts.assign(kMaxSegments + 1, 0.0);
      break;
    case Kind::SineSquared: {
      const double r = std::abs(rate);
      if (!lattice_points(shift + kPi / (4 * r), kPi / (2 * r), lo, hi, kMaxSegments, pts))
        pts.assign(kMaxSegments + 1, 0.0);
      break;
    }
    case Kind::Matern: {
      // Curvature sign follows the polynomial (E' - cE)(s) for s > 0.
      const MaternCoefficients m = matern_coefficients(order);
      auto f = [&m](double s) { return horner_derivative(m.e, s) - m.c * horner(m.e, s); };
      for (double s : sign_changes(f, std::sqrt(std::max(lo, 0.0)), std::sqrt(std::max(hi, 0.0))))
        if (s * s > lo && s * s < hi) pts.push_back(s * s);
      break;
    }
    default:
      break;  // convex, concave or affine throughout
  }
  return pts;
}

Interval Profile::range(double lo, double hi) const {
  std::vector<double> cand{lo, hi};
  bool bounded = true;
  switch (kind) {
    case Kind::Cosine:
      bounded = lattice_points(0.0, kPi, lo, hi, kMaxSegments, cand);
      break;
    case Kind::Quadratic:
      if (shift > lo && shift < hi) cand.push_back(shift);
      break;
    case Kind::SineSquared:
      bounded = lattice_points(shift, kPi / (2 * std::abs(rate)), lo, hi, kMaxSegments, cand);
      break;
    default:
      break;
  }
  if (!bounded) {
    if (kind == Kind::Cosine) return {-std::abs(scale), std::abs(scale)};
    return {std::min(0.0, scale), std::max(0.0, scale)};
  }
  Interval r(value(cand.front()));
  for (double v : cand) r = hull(r, Interval(value(v)));
  return r;
}

LinearBoundPair build_lbf_ubf(const Profile& psi, double lo, double hi) {
  if (!(hi > lo)) {
    const double v = psi.value(lo);
    return {v, 0.0, v, 0.0};
  }
  std::vector<double> pts{lo};
  const std::vector<double> flex = psi.inflections(lo, hi);
  if (flex.size() > kMaxSegments) {
    const Interval r = psi.range(lo, hi);
    return {r.lo, 0.0, r.hi, 0.0};
  }
  pts.insert(pts.end(), flex.begin(), flex.end());
  pts.push_back(hi);

  LinearBoundPair acc = tangent_and_chord(psi, pts[0], pts[1]);
  for (size_t s = 1; s + 1 < pts.size(); ++s) {
    const LinearBoundPair seg = tangent_and_chord(psi, pts[s], pts[s + 1]);
    const double end = pts[s + 1];
    // Stitch: a line under (over) both pieces at both ends stays under (over)
    // both on the whole interval.
    line_through(lo, std::min(acc.lower(lo), seg.lower(lo)), end, std::min(acc.lower(end), seg.lower(end)),
                 acc.a_lower, acc.b_lower);
    line_through(lo, std::max(acc.upper(lo), seg.upper(lo)), end, std::max(acc.upper(end), seg.upper(end)),
                 acc.a_upper, acc.b_upper);
  }
  // Outward nudge for rounding in the tangent/chord arithmetic.
  const double mag = std::max(std::abs(lo), std::abs(hi));
  const double slack_l = 8 * std::numeric_limits<double>::epsilon() * (std::abs(acc.a_lower) + std::abs(acc.b_lower) * mag);
  const double slack_u = 8 * std::numeric_limits<double>::epsilon() * (std::abs(acc.a_upper) + std::abs(acc.b_upper) * mag);
  acc.a_lower -= slack_l;
  acc.a_upper += slack_u;
  return acc;
}

// ---------------------------------------------------------------------------
// PhiFunction

Profile PhiFunction::component(Index j, double y_j) const {
  switch (kind) {
    case Kind::Quadratic:
      return Profile::quadratic(theta(j), y_j);
    case Kind::Periodic:
      return Profile::sine_squared(theta(j), period(j), y_j);
    case Kind::Linear:
      return Profile::affine(coef_x(j), coef_y(j) * y_j);
  }
  return {};
}

double PhiFunction::upper_bound(const Vector& coeffs, const Matrix& anchors, const Region& region, Vector* argmax) const {
  if (coeffs.size() != anchors.rows()) throw std::invalid_argument("one coefficient per anchor required");
  const Index d = region.dim();
  if (anchors.rows() > 0 && anchors.cols() != d) throw std::invalid_argument("anchor dimension differs from region");
  if (argmax) *argmax = region.center();
  if (anchors.rows() == 0) return 0.0;

  double total = 0.0;
  switch (kind) {
    case Kind::Quadratic: {
      const double csum = coeffs.sum();
      for (Index j = 0; j < d; ++j) {
        const double qa = theta(j) * csum;
        const double qb = -2.0 * theta(j) * coeffs.dot(anchors.col(j));
        const double qc = theta(j) * coeffs.dot(anchors.col(j).cwiseAbs2());
        auto h = [&](double x) { return (qa * x + qb) * x + qc; };
        double best_x = region.lower(j);
        double best = h(best_x);
        if (h(region.upper(j)) > best) {
          best_x = region.upper(j);
          best = h(best_x);
        }
        if (qa != 0.0) {
          const double vx = -qb / (2.0 * qa);
          if (vx > region.lower(j) && vx < region.upper(j) && h(vx) > best) {
            best_x = vx;
            best = h(vx);
          }
        }
        total += best;
        if (argmax) (*argmax)(j) = best_x;
      }
      break;
    }
    case Kind::Periodic: {
      // sum_i c_i sin^2(p (x - y_i)) = (C - A cos 2px - B sin 2px) / 2 with
      // A = sum c_i cos 2p y_i and B = sum c_i sin 2p y_i: one sinusoid per
      // dimension, maximized exactly.
      for (Index j = 0; j < d; ++j) {
        const double w = 2.0 * period(j);
        double a = 0.0, b = 0.0;
        for (Index i = 0; i < anchors.rows(); ++i) {
          a += coeffs(i) * std::cos(w * anchors(i, j));
          b += coeffs(i) * std::sin(w * anchors(i, j));
        }
        auto h = [&](double x) { return 0.5 * theta(j) * (coeffs.sum() - a * std::cos(w * x) - b * std::sin(w * x)); };
        double best_x = region.lower(j);
        double best = h(best_x);
        if (h(region.upper(j)) > best) {
          best_x = region.upper(j);
          best = h(best_x);
        }
        const double amp = std::hypot(a, b);
        if (amp > 0.0) {
          // Peaks where w x = atan2(b, a) + pi (mod 2 pi).
          const double phase = std::atan2(b, a) + kPi;
          const double k = std::ceil((w * region.lower(j) - phase) / (2.0 * kPi));
          const double x = (phase + 2.0 * kPi * k) / w;
          if (x <= region.upper(j)) {
            const double peak = 0.5 * theta(j) * (coeffs.sum() + amp);
            if (peak > best) {
              best = peak;
              best_x = std::clamp(x, region.lower(j), region.upper(j));
            }
          }
        }
        total += best;
        if (argmax) (*argmax)(j) = best_x;
      }
      break;
    }
    case Kind::Linear: {
      const double csum = coeffs.sum();
      for (Index j = 0; j < d; ++j) {
        const double w = csum * coef_x(j);
        const double x = w >= 0.0 ? region.upper(j) : region.lower(j);
        total += w * x + coef_y(j) * coeffs.dot(anchors.col(j));
        if (argmax) (*argmax)(j) = x;
      }
      break;
    }
  }
  return total;
}

double joint_upper_bound(const std::vector<const PhiFunction*>& phis, const Matrix& coeffs, const Matrix& anchors,
                         const Region& region, Vector* argmax, int samples) {
  if (coeffs.cols() != static_cast<Index>(phis.size()) || coeffs.rows() != anchors.rows())
    throw std::invalid_argument("one coefficient column per atom and one row per anchor required");
  if (samples < 2) throw std::invalid_argument("at least two samples per dimension");
  const Index d = region.dim();
  if (argmax) *argmax = region.center();
  if (anchors.rows() == 0) return 0.0;

  struct Wave {
    double cos_coef, sin_coef, freq;
  };
  double total = 0.0;
  for (Index j = 0; j < d; ++j) {
    // g(x) = quad x^2 + lin x + level + sum of waves, collected over atoms.
    double quad = 0.0, lin = 0.0, level = 0.0, curvature = 0.0;
    std::vector<Wave> waves;
    for (size_t k = 0; k < phis.size(); ++k) {
      const PhiFunction& phi = *phis[k];
      const auto c = coeffs.col(static_cast<Index>(k));
      const double csum = c.sum();
      switch (phi.kind) {
        case PhiFunction::Kind::Quadratic:
          quad += phi.theta(j) * csum;
          lin -= 2.0 * phi.theta(j) * c.dot(anchors.col(j));
          level += phi.theta(j) * c.dot(anchors.col(j).cwiseAbs2());
          break;
        case PhiFunction::Kind::Periodic: {
          const double w = 2.0 * phi.period(j);
          double a = 0.0, b = 0.0;
          for (Index i = 0; i < anchors.rows(); ++i) {
            a += c(i) * std::cos(w * anchors(i, j));
            b += c(i) * std::sin(w * anchors(i, j));
          }
          const double half = 0.5 * phi.theta(j);
          level += half * csum;
          waves.push_back({-half * a, -half * b, w});
          curvature += half * std::hypot(a, b) * w * w;
          break;
        }
        case PhiFunction::Kind::Linear:
          lin += csum * phi.coef_x(j);
          level += phi.coef_y(j) * c.dot(anchors.col(j));
          break;
      }
    }
    auto g = [&](double x) {
      double v = (quad * x + lin) * x + level;
      for (const Wave& wv : waves) v += wv.cos_coef * std::cos(wv.freq * x) + wv.sin_coef * std::sin(wv.freq * x);
      return v;
    };
    const double lo = region.lower(j), hi = region.upper(j);
    double best_x = lo;
    double best = g(lo);
    if (waves.empty()) {
      if (g(hi) > best) {
        best_x = hi;
        best = g(hi);
      }
      if (quad != 0.0) {
        const double vx = -lin / (2.0 * quad);
        if (vx > lo && vx < hi && g(vx) > best) {
          best_x = vx;
          best = g(vx);
        }
      }
      total += best;
    } else {
      const double step = (hi - lo) / (samples - 1);
      for (int s = 1; s < samples; ++s) {
        const double x = s + 1 == samples ? hi : lo + s * step;
        const double v = g(x);
        if (v > best) {
          best = v;
          best_x = x;
        }
      }
      // Between neighbouring samples g exceeds their larger value by at most
      // sup|g''| step^2 / 8.
      curvature += 2.0 * std::abs(quad);
      total += best + curvature * step * step / 8.0;
    }
    if (argmax) (*argmax)(j) = best_x;
  }
  return total;
}

PhiRange PhiFunction::range(const Vector& anchor, const Region& region) const {
  const Matrix a = anchor.transpose();
  const double hi = upper_bound(Vector::Ones(1), a, region);
  const double lo = -upper_bound(-Vector::Ones(1), a, region);
  return {lo, std::max(lo, hi)};
}

Interval PhiFunction::diagonal_range(const Region& region) const {
  if (kind != Kind::Linear) return Interval(0.0);
  Interval r(0.0);
  for (Index j = 0; j < region.dim(); ++j)
    r += Interval(coef_x(j) + coef_y(j)) * Interval(region.lower(j), region.upper(j));
  return r;
}

// ---------------------------------------------------------------------------
// Composition

Interval affine_extrema(double a, const Vector& b, const std::vector<PhiRange>& ranges) {
  Interval r(a);
  for (Index k = 0; k < b.size(); ++k) r += Interval(b(k)) * Interval(ranges[static_cast<size_t>(k)].lower, ranges[static_cast<size_t>(k)].upper);
  return r;
}

AffineBound compose_bounds_sum(const AffineBound& first, const AffineBound& second, double k1, double k2) {
  if (!(k1 >= 0.0) || !(k2 >= 0.0)) throw std::invalid_argument("sum composition weights must be nonnegative");
  AffineBound r;
  r.a_lower = k1 * first.a_lower + k2 * second.a_lower;
  r.b_lower = k1 * first.b_lower + k2 * second.b_lower;
  r.a_upper = k1 * first.a_upper + k2 * second.a_upper;
  r.b_upper = k1 * first.b_upper + k2 * second.b_upper;
  r.value = Interval(k1) * first.value + Interval(k2) * second.value;
  return r;
}

AffineBound compose_bounds_product(const AffineBound& first, const AffineBound& second, const std::vector<PhiRange>& atom_ranges) {
  const Interval& f = first.value;
  const Interval& g = second.value;
  if (f.lo > f.hi || g.lo > g.hi) throw std::invalid_argument("inverted factor enclosure");

  // f g >= f_L g + g_L f - f_L g_L
  const AffineBound l1 = scaled(second, f.lo, true);
  const AffineBound l2 = scaled(first, g.lo, true);
  // f g <= f_U g + g_L f - f_U g_L
  const AffineBound u1 = scaled(second, f.hi, false);
  const AffineBound u2 = scaled(first, g.lo, false);

  AffineBound r;
  r.a_lower = l1.a_lower + l2.a_lower - f.lo * g.lo;
  r.b_lower = l1.b_lower + l2.b_lower;
  r.a_upper = u1.a_upper + u2.a_upper - f.hi * g.lo;
  r.b_upper = u1.b_upper + u2.b_upper;
  r.value = f * g;
  if (!atom_ranges.empty()) {
    const Interval lo = affine_extrema(r.a_lower, r.b_lower, atom_ranges);
    const Interval hi = affine_extrema(r.a_upper, r.b_upper, atom_ranges);
    r.value = intersect(r.value, Interval(lo.lo, hi.hi));
  }
  return r;
}

// ---------------------------------------------------------------------------
// KernelDecomposition

KernelDecomposition::KernelDecomposition(const KernelSpec& spec) {
  spec.validate();
  dim_ = spec.input_dim();
  stationary_ = spec.stationary();
  root_ = build(spec);
}

KernelDecomposition::Node KernelDecomposition::leaf(PhiFunction phi, Profile psi) {
  Node n;
  n.kind = Node::Kind::Leaf;
  n.atom = static_cast<Index>(atoms_.size());
  atoms_.push_back({std::move(phi), psi});
  return n;
}

KernelDecomposition::Node KernelDecomposition::build(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return leaf(PhiFunction::quadratic(spec.theta), Profile::exponential(spec.variance, -1.0));
    case KernelFamily::RationalQuadratic:
      return leaf(PhiFunction::quadratic(spec.theta), Profile::rational_quadratic(spec.variance, spec.alpha));
    case KernelFamily::Matern:
      return leaf(PhiFunction::quadratic(spec.theta), Profile::matern(spec.variance, spec.order));
    case KernelFamily::Periodic:
      return leaf(PhiFunction::periodic(spec.theta, spec.period), Profile::exponential(spec.variance, -0.5));
    case KernelFamily::Sum: {
      Node n;
      n.kind = Node::Kind::Sum;
      for (const auto& c : spec.children) n.children.push_back(build(c));
      n.weights = spec.weights;
      return n;
    }
    case KernelFamily::Product: {
      Node n;
      n.kind = Node::Kind::Product;
      for (const auto& c : spec.children) n.children.push_back(build(c));
      return n;
    }
    case KernelFamily::SpectralStationary: {
      Node n;
      n.kind = Node::Kind::Sum;
      for (const auto& comp : spec.components) {
        Node p;
        p.kind = Node::Kind::Product;
        p.children.push_back(leaf(PhiFunction::quadratic(comp.theta), Profile::exponential(comp.variance, -1.0)));
        p.children.push_back(leaf(PhiFunction::linear(comp.frequency, -comp.frequency), Profile::cosine(1.0)));
        n.children.push_back(std::move(p));
        n.weights.push_back(1.0);
      }
      return n;
    }
    case KernelFamily::SpectralNonStationary: {
      // Psi(x)'Psi(y) = sum_{a,b} cos(w_a.x - w_b.y)
      Node n;
      n.kind = Node::Kind::Sum;
      for (const auto& comp : spec.components) {
        Node p;
        p.kind = Node::Kind::Product;
        p.children.push_back(leaf(PhiFunction::linear(comp.theta, comp.theta), Profile::exponential(comp.variance, 1.0)));
        Node trig;
        trig.kind = Node::Kind::Sum;
        const Vector* freqs[2] = {&comp.frequency, &comp.frequency2};
        for (const Vector* wa : freqs)
          for (const Vector* wb : freqs) {
            trig.children.push_back(leaf(PhiFunction::linear(*wa, -*wb), Profile::cosine(1.0)));
            trig.weights.push_back(1.0);
          }
        p.children.push_back(std::move(trig));
        n.children.push_back(std::move(p));
        n.weights.push_back(1.0);
      }
      return n;
    }
  }
  throw std::logic_error("unknown kernel family");
}

double KernelDecomposition::evaluate(const Node& node, const std::vector<double>& atom_values) const {
  switch (node.kind) {
    case Node::Kind::Leaf:
      return atom_values[static_cast<size_t>(node.atom)];
    case Node::Kind::Sum: {
      double s = 0.0;
      for (size_t c = 0; c < node.children.size(); ++c) s += node.weights[c] * evaluate(node.children[c], atom_values);
      return s;
    }
    case Node::Kind::Product: {
      double s = 1.0;
      for (const auto& c : node.children) s *= evaluate(c, atom_values);
      return s;
    }
  }
  return 0.0;
}

double KernelDecomposition::evaluate(const Vector& x, const Vector& y) const {
  std::vector<double> v(atoms_.size());
  for (size_t k = 0; k < atoms_.size(); ++k) v[k] = atoms_[k].psi.value(atoms_[k].phi.value(x, y));
  return evaluate(root_, v);
}

AffineBound KernelDecomposition::bound(const Node& node, const std::vector<AtomBound>& atoms,
                                       const std::vector<PhiRange>& ranges) const {
  switch (node.kind) {
    case Node::Kind::Leaf: {
      const auto k = static_cast<size_t>(node.atom);
      const AtomBound& ab = atoms[k];
      AffineBound r;
      r.b_lower = Vector::Zero(atom_count());
      r.b_upper = Vector::Zero(atom_count());
      r.a_lower = ab.psi.a_lower;
      r.b_lower(node.atom) = ab.psi.b_lower;
      r.a_upper = ab.psi.a_upper;
      r.b_upper(node.atom) = ab.psi.b_upper;
      r.value = atoms_[k].psi.range(ab.phi.lower, ab.phi.upper);
      return r;
    }
    case Node::Kind::Sum: {
      AffineBound acc = bound(node.children.front(), atoms, ranges);
      acc = compose_bounds_sum(acc, acc, node.weights.front(), 0.0);
      for (size_t c = 1; c < node.children.size(); ++c)
        acc = compose_bounds_sum(acc, bound(node.children[c], atoms, ranges), 1.0, node.weights[c]);
      return acc;
    }
    case Node::Kind::Product: {
      AffineBound acc = bound(node.children.front(), atoms, ranges);
      for (size_t c = 1; c < node.children.size(); ++c)
        acc = compose_bounds_product(acc, bound(node.children[c], atoms, ranges), ranges);
      return acc;
    }
  }
  return {};
}

AnchorBound KernelDecomposition::bound(const Vector& anchor, const Region& region, bool with_dims) const {
  if (anchor.size() != dim_ || region.dim() != dim_) throw std::invalid_argument("anchor/region dimension mismatch");
  AnchorBound out;
  out.atoms.resize(atoms_.size());
  std::vector<PhiRange> ranges(atoms_.size());
  for (size_t k = 0; k < atoms_.size(); ++k) {
    const Atom& a = atoms_[k];
    AtomBound& ab = out.atoms[k];
    ab.phi = a.phi.range(anchor, region);
    ab.psi = build_lbf_ubf(a.psi, ab.phi.lower, ab.phi.upper);
    ranges[k] = ab.phi;
    if (with_dims) {
      ab.dims.resize(static_cast<size_t>(dim_));
      ab.dim_ranges.resize(static_cast<size_t>(dim_));
      for (Index j = 0; j < dim_; ++j) {
        const Profile comp = a.phi.component(j, anchor(j));
        const Interval r = comp.range(region.lower(j), region.upper(j));
        ab.dim_ranges[static_cast<size_t>(j)] = {r.lo, r.hi};
        ab.dims[static_cast<size_t>(j)] = build_lbf_ubf(comp, region.lower(j), region.upper(j));
      }
    }
  }
  out.kernel = bound(root_, out.atoms, ranges);
  return out;
}

Interval KernelDecomposition::diagonal(const Node& node, const std::vector<Interval>& atom_values) const {
  switch (node.kind) {
    case Node::Kind::Leaf:
      return atom_values[static_cast<size_t>(node.atom)];
    case Node::Kind::Sum: {
      Interval s(0.0);
      for (size_t c = 0; c < node.children.size(); ++c) s += Interval(node.weights[c]) * diagonal(node.children[c], atom_values);
      return s;
    }
    case Node::Kind::Product: {
      Interval s(1.0);
      for (const auto& c : node.children) s *= diagonal(c, atom_values);
      return s;
    }
  }
  return {};
}

Interval KernelDecomposition::diagonal_range(const Region& region) const {
  if (stationary_) {
    const Vector c = region.center();
    return Interval(evaluate(c, c));
  }
  std::vector<Interval> v(atoms_.size());
  for (size_t k = 0; k < atoms_.size(); ++k) {
    const Interval p = atoms_[k].phi.diagonal_range(region);
    v[k] = atoms_[k].psi.range(p.lo, p.hi);
  }
  return diagonal(root_, v);
}

// ---------------------------------------------------------------------------
// Single-atom convenience forms

namespace {

const Atom& single_atom(const KernelDecomposition& dec) {
  if (dec.atom_count() != 1) throw std::invalid_argument("operation defined for single-atom kernel families only");
  return dec.atom(0);
}

}  // namespace

PhiRange phi_range(const KernelSpec& spec, const Vector& anchor, const Region& region) {
  const KernelDecomposition dec(spec);
  return single_atom(dec).phi.range(anchor, region);
}

LinearBoundPair build_lbf_ubf(const KernelSpec& spec, const Vector& anchor, const Region& region) {
  const KernelDecomposition dec(spec);
  const Atom& a = single_atom(dec);
  const PhiRange r = a.phi.range(anchor, region);
  return build_lbf_ubf(a.psi, r.lower, r.upper);
}

double upper_bounding_U(const KernelSpec& spec, const Vector& coeffs, const Matrix& anchors, const Region& region) {
  const KernelDecomposition dec(spec);
  return single_atom(dec).phi.upper_bound(coeffs, anchors, region);
}

}  // namespace gpcert
