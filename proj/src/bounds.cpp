// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gpcert/linalg.hpp"
#include "gpcert/lp.hpp"
#include "gpcert/qp.hpp"

namespace gpcert {

RegionKernelBounds::RegionKernelBounds(const GpModel& model, const Region& region, Index output, bool with_dims)
    : region_(region), output_(output), with_dims_(with_dims) {
  if (region.dim() != model.dim()) throw std::invalid_argument("region dimension differs from model");
  if (output < 0 || output >= model.outputs()) throw std::out_of_range("output index out of range");
  const KernelDecomposition& dec = model.decomposition(output);
  anchors_.reserve(static_cast<size_t>(model.size()));
  for (Index i = 0; i < model.size(); ++i) anchors_.push_back(dec.bound(model.inputs().row(i).transpose(), region, with_dims));
  diagonal_ = dec.diagonal_range(region);
}

namespace {

Vector best_of(const GpModel& model, Index output, const std::vector<Vector>& candidates, bool minimize) {
  Vector best = candidates.front();
  double best_value = model.latent_mean<double>(output, best);
  for (size_t k = 1; k < candidates.size(); ++k) {
    const double v = model.latent_mean<double>(output, candidates[k]);
    if (minimize ? v < best_value : v > best_value) {
      best_value = v;
      best = candidates[k];
    }
  }
  return best;
}

// Centered-form enclosure of r' M r for r in the box [center - half, center + half].
Interval quadratic_enclosure(const Matrix& m, const Vector& center, const Vector& half, bool psd) {
  const Vector mc = m * center;
  const double qc = center.dot(mc);
  const double linear = 2.0 * mc.cwiseAbs().dot(half);
  const double curvature = half.dot(m.cwiseAbs() * half);
  Interval q(qc - linear - (psd ? 0.0 : curvature), qc + linear + curvature);
  if (psd) q.lo = std::max(q.lo, 0.0);
  return q;
}

struct BoxData {
  Vector center;
  Vector half;
};

BoxData kernel_box(const RegionKernelBounds& kb) {
  const Index n = static_cast<Index>(kb.anchors().size());
  BoxData b{Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    const Interval v = kb.value(i);
    b.center(i) = 0.5 * (v.lo + v.hi);
    b.half(i) = 0.5 * (v.hi - v.lo);
  }
  return b;
}

// Relaxation of the graph {(x, r(x), phi(x))} over the region for the
// active anchors. Variables are [x | r | phi_akj].
struct Relaxation {
  Matrix constraints;
  Vector rhs;
  Vector lower;
  Vector upper;
  Index d = 0;
  Index active = 0;
};

Relaxation build_relaxation(const GpModel& model, const RegionKernelBounds& kb, const std::vector<Index>& active) {
  const Region& region = kb.region();
  const Index d = region.dim();
  const Index na = static_cast<Index>(active.size());
  const Index atoms = model.decomposition(kb.output()).atom_count();
  const Index nvars = d + na + na * atoms * d;
  const Index nrows = 2 * na + 2 * na * atoms * d;

  Relaxation rel;
  rel.d = d;
  rel.active = na;
  rel.constraints = Matrix::Zero(nrows, nvars);
  rel.rhs = Vector::Zero(nrows);
  rel.lower = Vector(nvars);
  rel.upper = Vector(nvars);
  rel.lower.head(d) = region.lower();
  rel.upper.head(d) = region.upper();

  Index row = 0;
  for (Index a = 0; a < na; ++a) {
    const AnchorBound& ab = kb.anchors()[static_cast<size_t>(active[static_cast<size_t>(a)])];
    const Index r_col = d + a;
    rel.lower(r_col) = ab.kernel.value.lo;
    rel.upper(r_col) = ab.kernel.value.hi;
    const Index lower_row = row++;
    const Index upper_row = row++;
    // a_L + sum_k b_Lk sum_j phi_akj - r_a <= 0 and r_a - a_U - sum_k b_Uk sum_j phi_akj <= 0
    rel.constraints(lower_row, r_col) = -1.0;
    rel.rhs(lower_row) = -ab.kernel.a_lower;
    rel.constraints(upper_row, r_col) = 1.0;
    rel.rhs(upper_row) = ab.kernel.a_upper;
    for (Index k = 0; k < atoms; ++k) {
      const AtomBound& atom = ab.atoms[static_cast<size_t>(k)];
      for (Index j = 0; j < d; ++j) {
        const Index col = d + na + (a * atoms + k) * d + j;
        const LinearBoundPair& lb = atom.dims[static_cast<size_t>(j)];
        const PhiRange& pr = atom.dim_ranges[static_cast<size_t>(j)];
        rel.lower(col) = pr.lower;
        rel.upper(col) = pr.upper;
        rel.constraints(lower_row, col) = ab.kernel.b_lower(k);
        rel.constraints(upper_row, col) = -ab.kernel.b_upper(k);
        // aL + bL x_j - phi <= 0 ; phi - aU - bU x_j <= 0
        rel.constraints(row, j) = lb.b_lower;
        rel.constraints(row, col) = -1.0;
        rel.rhs(row++) = -lb.a_lower;
        rel.constraints(row, j) = -lb.b_upper;
        rel.constraints(row, col) = 1.0;
        rel.rhs(row++) = lb.a_upper;
      }
    }
  }
  // Zero-width boxes can come out inverted by rounding.
  for (Index v = 0; v < nvars; ++v)
    if (rel.lower(v) > rel.upper(v)) rel.lower(v) = rel.upper(v) = 0.5 * (rel.lower(v) + rel.upper(v));
  return rel;
}

std::vector<Index> pick_active(const RegionKernelBounds& kb, Index cap) {
  const Index n = static_cast<Index>(kb.anchors().size());
  std::vector<Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (n <= cap) return idx;
  std::stable_sort(idx.begin(), idx.end(), [&kb](Index a, Index b) { return kb.value(a).mag() > kb.value(b).mag(); });
  idx.resize(static_cast<size_t>(cap));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

MeanBound bound_mean(const GpModel& model, const RegionKernelBounds& kb) {
  const Index c = kb.output();
  const KernelDecomposition& dec = model.decomposition(c);
  const Index n = model.size();
  const Index atoms = dec.atom_count();
  const Vector t = model.weights().col(c);
  const Region& region = kb.region();

  double a_lo = 0.0, a_hi = 0.0;
  Matrix b_lo(n, atoms), b_hi(n, atoms);
  Interval direct(0.0);
  for (Index i = 0; i < n; ++i) {
    const AffineBound& g = kb.anchors()[static_cast<size_t>(i)].kernel;
    const double ti = t(i);
    // The lower bound of t_i k_i uses the kernel LBF when t_i >= 0 and the
    // UBF otherwise; the upper bound the other way round.
    const bool pos = ti >= 0.0;
    a_lo += ti * (pos ? g.a_lower : g.a_upper);
    a_hi += ti * (pos ? g.a_upper : g.a_lower);
    b_lo.row(i) = ti * (pos ? g.b_lower : g.b_upper).transpose();
    b_hi.row(i) = ti * (pos ? g.b_upper : g.b_lower).transpose();
    direct += Interval(ti) * g.value;
  }

  double lower = a_lo, upper = a_hi;
  std::vector<Vector> candidates{region.center()};
  Vector arg;
  for (Index k = 0; k < atoms; ++k) {
    const PhiFunction& phi = dec.atom(k).phi;
    if (b_lo.col(k).cwiseAbs().maxCoeff() > 0.0) {
      lower -= phi.upper_bound(-b_lo.col(k), model.inputs(), region, &arg);
      candidates.push_back(region.clamp(arg));
    }
    if (b_hi.col(k).cwiseAbs().maxCoeff() > 0.0) {
      upper += phi.upper_bound(b_hi.col(k), model.inputs(), region, &arg);
      candidates.push_back(region.clamp(arg));
    }
  }
  if (atoms > 1) {
    // Per-atom suprema add up first-order terms that cancel jointly.
    std::vector<const PhiFunction*> phis;
    for (Index k = 0; k < atoms; ++k) phis.push_back(&dec.atom(k).phi);
    lower = std::max(lower, a_lo - joint_upper_bound(phis, -b_lo, model.inputs(), region, &arg));
    candidates.push_back(region.clamp(arg));
    upper = std::min(upper, a_hi + joint_upper_bound(phis, b_hi, model.inputs(), region, &arg));
    candidates.push_back(region.clamp(arg));
  }
  MeanBound out;
  out.value = Interval(std::max(lower, direct.lo), std::min(upper, direct.hi));
  if (out.value.lo > out.value.hi) out.value = Interval(out.value.hi, out.value.lo);
  out.argmin = best_of(model, c, candidates, true);
  out.argmax = best_of(model, c, candidates, false);
  return out;
}

MeanBound bound_mean(const GpModel& model, const Region& region, Index output) {
  return bound_mean(model, RegionKernelBounds(model, region, output, false));
}

VarianceBound bound_variance_interval(const GpModel& model, const RegionKernelBounds& kb) {
  const Index c = kb.output();
  const BoxData box = kernel_box(kb);
  const Interval q = quadratic_enclosure(model.posterior_block(c, c), box.center, box.half, true);
  VarianceBound out;
  out.upper = kb.diagonal().hi - q.lo;
  out.lower_unclipped = kb.diagonal().lo - q.hi;
  out.lower = std::max(out.lower_unclipped, 0.0);
  out.upper = std::max(out.upper, out.lower);
  out.argmin = out.argmax = kb.region().center();
  return out;
}

VarianceBound bound_variance(const GpModel& model, const RegionKernelBounds& kb, bool need_lower, bool need_upper,
                             const BoundOptions& options) {
  VarianceBound out = bound_variance_interval(model, kb);
  if (!options.relaxations || (!need_lower && !need_upper) || kb.region().is_point()) return out;
  if (!kb.has_dims()) throw std::invalid_argument("variance relaxations need per-dimension kernel bounds");

  const Index c = kb.output();
  const Index n = model.size();
  const Index d = model.dim();
  const Matrix s = model.posterior_block(c, c);
  const std::vector<Index> active = pick_active(kb, options.active_points);
  const Index na = static_cast<Index>(active.size());

  // Remainder of the quadratic form outside the active block.
  const BoxData box = kernel_box(kb);
  Interval rest(0.0);
  if (na < n) {
    Matrix m = s;
    for (Index a : active)
      for (Index b : active) m(a, b) = 0.0;
    rest = quadratic_enclosure(m, box.center, box.half, false);
  }
  Matrix s_aa(na, na);
  for (Index a = 0; a < na; ++a)
    for (Index b = 0; b < na; ++b) s_aa(a, b) = s(active[static_cast<size_t>(a)], active[static_cast<size_t>(b)]);

  const Relaxation rel = build_relaxation(model, kb, active);
  const Index nvars = rel.lower.size();
  const Region& region = kb.region();

  if (need_upper) {
    QuadraticProgram qp;
    qp.hessian = Matrix::Zero(nvars, nvars);
    qp.hessian.block(d, d, na, na) = 2.0 * s_aa;
    qp.linear = Vector::Zero(nvars);
    qp.constraints = rel.constraints;
    qp.rhs = rel.rhs;
    qp.lower = rel.lower;
    qp.upper = rel.upper;
    try {
      const QpResult res = solve_qp(qp);
      const double q_lo = std::max(res.lower_bound, 0.0) + rest.lo;
      const double upper = kb.diagonal().hi - q_lo;
      if (upper < out.upper) out.upper = upper;
      out.argmax = region.clamp(res.solution.head(d));
    } catch (const std::runtime_error&) {
      // Keep the interval bound.
    }
  }

  if (need_lower) {
    const SymmetricEigen* cached = na == n ? model.block_eigen(c) : nullptr;
    SymmetricEigen local;
    if (!cached) {
      local = jacobi_eigen(s_aa);
      cached = &local;
    }
    const Matrix& v = cached->vectors;
    const Vector lambda = cached->values.cwiseMax(0.0);
    const double tiny = 1e-14 * std::max(1.0, lambda.maxCoeff());

    // Ranges of the rotated coordinates v_i' r.
    Vector lo(na), hi(na);
    for (Index i = 0; i < na; ++i) {
      Interval acc(0.0);
      for (Index a = 0; a < na; ++a) acc += Interval(v(a, i)) * kb.value(active[static_cast<size_t>(a)]);
      lo(i) = acc.lo;
      hi(i) = acc.hi;
    }
    LinearProgram lp{Vector::Zero(nvars), rel.constraints, rel.rhs, rel.lower, rel.upper};
    try {
      SimplexSolver solver(lp);
      if (options.range_lps) {
        Vector obj = Vector::Zero(nvars);
        for (Index i = 0; i < na; ++i) {
          if (lambda(i) <= tiny) continue;
          obj.segment(d, na) = v.col(i);
          const LpResult rmin = solver.solve(obj);
          if (rmin.status == LpStatus::Optimal) lo(i) = std::max(lo(i), rmin.dual_bound);
          obj.segment(d, na) = -v.col(i);
          const LpResult rmax = solver.solve(obj);
          if (rmax.status == LpStatus::Optimal) hi(i) = std::min(hi(i), -rmax.dual_bound);
          if (lo(i) > hi(i)) lo(i) = hi(i) = 0.5 * (lo(i) + hi(i));
        }
      }
      // Chord of lambda_i u^2 over [lo_i, hi_i] bounds it from above.
      Vector slope = Vector::Zero(na);
      double offset = 0.0;
      for (Index i = 0; i < na; ++i) {
        if (lambda(i) <= tiny) continue;
        slope(i) = lambda(i) * (lo(i) + hi(i));
        offset -= lambda(i) * lo(i) * hi(i);
      }
      Vector obj = Vector::Zero(nvars);
      obj.segment(d, na) = -(v * slope);
      const LpResult res = solver.solve(obj);
      if (res.status == LpStatus::Optimal) {
        double q_hi = -res.dual_bound + offset;
        double interval_q = 0.0;
        for (Index i = 0; i < na; ++i) interval_q += lambda(i) * std::max(lo(i) * lo(i), hi(i) * hi(i));
        q_hi = std::min(q_hi, interval_q) + rest.hi;
        const double lower = kb.diagonal().lo - q_hi;
        if (lower > out.lower_unclipped) {
          out.lower_unclipped = lower;
          out.lower = std::max(lower, 0.0);
        }
        out.argmin = region.clamp(res.solution.head(d));
      }
    } catch (const std::runtime_error&) {
      // Keep the interval bound.
    }
  }
  out.upper = std::max(out.upper, out.lower);
  return out;
}

double bound_variance_upper(const GpModel& model, const Region& region, Index output, const BoundOptions& options) {
  return bound_variance(model, RegionKernelBounds(model, region, output, options.relaxations), false, true, options).upper;
}

double bound_variance_lower(const GpModel& model, const Region& region, Index output, const BoundOptions& options) {
  return bound_variance(model, RegionKernelBounds(model, region, output, options.relaxations), true, false, options).lower;
}

Interval bound_cross_covariance(const GpModel& model, const RegionKernelBounds& ki, const RegionKernelBounds& kj) {
  const Index i = ki.output(), j = kj.output();
  const BoxData bi = kernel_box(ki);
  const BoxData bj = kernel_box(kj);
  const Matrix s = model.posterior_block(i, j);
  // r_i' S r_j with r = c + delta, |delta| <= half.
  const double centre = bi.center.dot(s * bj.center);
  const double radius = (s * bj.center).cwiseAbs().dot(bi.half) + (s.transpose() * bi.center).cwiseAbs().dot(bj.half) +
                        bi.half.dot(s.cwiseAbs() * bj.half);
  Interval cov(-(centre + radius), -(centre - radius));
  if (i == j) {
    cov.lo += ki.diagonal().lo;
    cov.hi += ki.diagonal().hi;
  }
  return cov;
}

Interval bound_cross_covariance(const GpModel& model, const Region& region, Index i, Index j, const BoundOptions& options) {
  if (i == j) {
    const RegionKernelBounds kb(model, region, i, options.relaxations);
    const VarianceBound v = bound_variance(model, kb, true, true, options);
    return {v.lower, v.upper};
  }
  return bound_cross_covariance(model, RegionKernelBounds(model, region, i, false), RegionKernelBounds(model, region, j, false));
}

MomentBounds bound_moments(const GpModel& model, const Region& region, const BoundOptions& options) {
  const Index m = model.outputs();
  MomentBounds out;
  out.mean_lower.resize(m);
  out.mean_upper.resize(m);
  out.cov_lower.resize(m, m);
  out.cov_upper.resize(m, m);
  out.witnesses.push_back(region.center());
  std::vector<RegionKernelBounds> kbs;
  kbs.reserve(static_cast<size_t>(m));
  for (Index c = 0; c < m; ++c) kbs.emplace_back(model, region, c, options.relaxations);
  for (Index c = 0; c < m; ++c) {
    const MeanBound mb = bound_mean(model, kbs[static_cast<size_t>(c)]);
    out.mean_lower(c) = mb.value.lo;
    out.mean_upper(c) = mb.value.hi;
    const VarianceBound vb = bound_variance(model, kbs[static_cast<size_t>(c)], true, true, options);
    out.cov_lower(c, c) = vb.lower;
    out.cov_upper(c, c) = vb.upper;
    for (const Vector* w : {&mb.argmin, &mb.argmax, &vb.argmin, &vb.argmax}) out.witnesses.push_back(*w);
    for (Index e = 0; e < c; ++e) {
      const Interval cov = bound_cross_covariance(model, kbs[static_cast<size_t>(c)], kbs[static_cast<size_t>(e)]);
      out.cov_lower(c, e) = out.cov_lower(e, c) = cov.lo;
      out.cov_upper(c, e) = out.cov_upper(e, c) = cov.hi;
    }
  }
  return out;
}

}  // namespace gpcert
