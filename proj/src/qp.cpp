// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/qp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gpcert/lp.hpp"

namespace gpcert {

void QuadraticProgram::validate() const {
  const Index n = linear.size();
  if (hessian.rows() != n || hessian.cols() != n) throw std::invalid_argument("QP Hessian shape mismatch");
  if (constraints.cols() != n || constraints.rows() != rhs.size())
    throw std::invalid_argument("QP constraint shape mismatch");
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("QP bound shape mismatch");
  for (Index j = 0; j < n; ++j)
    if (!std::isfinite(lower(j)) || !std::isfinite(upper(j)) || lower(j) > upper(j))
      throw std::invalid_argument("QP needs a finite nonempty box");
}

namespace {

enum class Bound : unsigned char { Free, AtLower, AtUpper };

struct ActiveSet {
  std::vector<Bound> bounds;
  std::vector<Index> rows;
  std::vector<Index> free;

  void refresh_free() {
    free.clear();
    for (size_t j = 0; j < bounds.size(); ++j)
      if (bounds[j] == Bound::Free) free.push_back(static_cast<Index>(j));
  }
};

Matrix working_rows(const QuadraticProgram& qp, const ActiveSet& set) {
  Matrix m(static_cast<Index>(set.rows.size()), static_cast<Index>(set.free.size()));
  for (size_t r = 0; r < set.rows.size(); ++r)
    for (size_t c = 0; c < set.free.size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = qp.constraints(set.rows[r], set.free[c]);
  return m;
}

// Multipliers of the working rows: least squares of M' lambda = -g_F.
Vector row_multipliers(const Matrix& m, const Vector& g_free) {
  if (m.rows() == 0) return Vector();
  Eigen::ColPivHouseholderQR<Matrix> qr(m.transpose());
  return qr.solve(Vector(-g_free));
}

double lower_bound_from(const QuadraticProgram& qp, const Vector& z, const Vector& lambda) {
  const Vector g = qp.hessian * z + qp.linear;
  const Vector reduced = g + qp.constraints.transpose() * lambda;
  double box_min = 0.0;
  for (Index j = 0; j < z.size(); ++j) box_min += std::min(reduced(j) * qp.lower(j), reduced(j) * qp.upper(j));
  return qp.objective(z) + box_min - g.dot(z) - lambda.dot(qp.rhs);
}

}  // namespace

QpResult solve_qp(const QuadraticProgram& qp, int max_iterations) {
  qp.validate();
  const Index n = qp.variables();
  const Index m = qp.constraints.rows();

  // Feasible starting vertex from the LP of the gradient at the box center.
  LinearProgram lp{qp.hessian * (0.5 * (qp.lower + qp.upper)) + qp.linear, qp.constraints, qp.rhs, qp.lower, qp.upper};
  const LpResult start = solve_lp(lp);
  if (start.status == LpStatus::Infeasible) throw std::runtime_error("QP is infeasible");
  if (start.status != LpStatus::Optimal) throw std::runtime_error("QP start-up LP hit its iteration limit");

  Vector z = start.solution.cwiseMax(qp.lower).cwiseMin(qp.upper);
  ActiveSet set;
  set.bounds.assign(static_cast<size_t>(n), Bound::Free);
  for (Index j = 0; j < n; ++j) {
    const double tol = 1e-12 * (1.0 + std::abs(qp.upper(j)) + std::abs(qp.lower(j)));
    if (qp.upper(j) - qp.lower(j) <= tol || z(j) - qp.lower(j) <= tol) {
      set.bounds[static_cast<size_t>(j)] = Bound::AtLower;
      z(j) = qp.lower(j);
    } else if (qp.upper(j) - z(j) <= tol) {
      set.bounds[static_cast<size_t>(j)] = Bound::AtUpper;
      z(j) = qp.upper(j);
    }
  }
  set.refresh_free();
  std::vector<bool> in_working(static_cast<size_t>(m), false);

  QpResult out;
  Vector lambda_rows;
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    const Vector g = qp.hessian * z + qp.linear;
    const double scale = 1.0 + g.lpNorm<Eigen::Infinity>();
    const Index nf = static_cast<Index>(set.free.size());
    const Index nw = static_cast<Index>(set.rows.size());
    const Matrix mw = working_rows(qp, set);
    if (nw > 0) {
      // Fixing variables at bounds can make working rows dependent on the
      // free variables; dependent rows stay satisfied and are dropped, or
      // the multipliers lose their meaning and the drop rule cycles.
      Eigen::ColPivHouseholderQR<Matrix> rank_qr(mw.transpose());
      rank_qr.setThreshold(1e-10);
      const Index rank = rank_qr.rank();
      if (rank < nw) {
        std::vector<Index> keep;
        for (Index r = 0; r < rank; ++r) keep.push_back(set.rows[static_cast<size_t>(rank_qr.colsPermutation().indices()(r))]);
        for (Index row : set.rows) in_working[static_cast<size_t>(row)] = false;
        std::sort(keep.begin(), keep.end());
        for (Index row : keep) in_working[static_cast<size_t>(row)] = true;
        set.rows = keep;
        continue;
      }
    }

    Vector g_free(nf);
    Matrix h_free(nf, nf);
    for (Index a = 0; a < nf; ++a) {
      g_free(a) = g(set.free[static_cast<size_t>(a)]);
      for (Index b = 0; b < nf; ++b) h_free(a, b) = qp.hessian(set.free[static_cast<size_t>(a)], set.free[static_cast<size_t>(b)]);
    }

    // Null-space basis of the working rows restricted to the free variables.
    Matrix basis;
    if (nw == 0) {
      basis = Matrix::Identity(nf, nf);
    } else {
      Eigen::HouseholderQR<Matrix> qr(mw.transpose());
      const Matrix q = qr.householderQ() * Matrix::Identity(nf, nf);
      basis = q.rightCols(std::max<Index>(nf - nw, 0));
    }

    Vector step_free = Vector::Zero(nf);
    bool unbounded_direction = false;
    if (basis.cols() > 0) {
      const Vector gz = basis.transpose() * g_free;
      const Matrix hz = basis.transpose() * h_free * basis;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (hz + hz.transpose()));
      const Vector& vals = eig.eigenvalues();
      const Matrix& vecs = eig.eigenvectors();
      const double curvature_tol = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
      const Vector coeff = vecs.transpose() * gz;
      Vector flat = Vector::Zero(gz.size());
      Vector newton = Vector::Zero(gz.size());
      for (Index k = 0; k < vals.size(); ++k) {
        if (vals(k) <= curvature_tol) {
          if (std::abs(coeff(k)) > 1e-12 * scale) flat -= coeff(k) * vecs.col(k);
        } else {
          newton -= coeff(k) / vals(k) * vecs.col(k);
        }
      }
      if (flat.size() > 0 && flat.squaredNorm() > 0.0) {
        step_free = basis * flat;
        unbounded_direction = true;
      } else {
        step_free = basis * newton;
      }
    }

    const double step_tol = 1e-13 * (1.0 + z.lpNorm<Eigen::Infinity>());
    if (step_free.size() > 0 && step_free.lpNorm<Eigen::Infinity>() > step_tol) {
      Vector step = Vector::Zero(n);
      for (Index a = 0; a < nf; ++a) step(set.free[static_cast<size_t>(a)]) = step_free(a);

      double alpha = unbounded_direction ? std::numeric_limits<double>::infinity() : 1.0;
      Index block_var = -1, block_row = -1;
      Bound block_side = Bound::Free;
      for (Index a = 0; a < nf; ++a) {
        const Index j = set.free[static_cast<size_t>(a)];
        const double p = step(j);
        if (std::abs(p) <= 1e-15) continue;
        const double room = p > 0 ? (qp.upper(j) - z(j)) / p : (qp.lower(j) - z(j)) / p;
        if (std::max(room, 0.0) < alpha) {
          alpha = std::max(room, 0.0);
          block_var = j;
          block_row = -1;
          block_side = p > 0 ? Bound::AtUpper : Bound::AtLower;
        }
      }
      for (Index i = 0; i < m; ++i) {
        if (in_working[static_cast<size_t>(i)]) continue;
        const double rate = qp.constraints.row(i).dot(step);
        if (rate <= 1e-14 * (1.0 + qp.constraints.row(i).lpNorm<Eigen::Infinity>())) continue;
        const double room = std::max(qp.rhs(i) - qp.constraints.row(i).dot(z), 0.0) / rate;
        if (room < alpha) {
          alpha = room;
          block_row = i;
          block_var = -1;
        }
      }
      if (!std::isfinite(alpha)) throw std::runtime_error("QP step is unbounded despite a finite box");
      z += alpha * step;
      z = z.cwiseMax(qp.lower).cwiseMin(qp.upper);
      if (block_var >= 0) {
        set.bounds[static_cast<size_t>(block_var)] = block_side;
        z(block_var) = block_side == Bound::AtUpper ? qp.upper(block_var) : qp.lower(block_var);
        set.refresh_free();
      } else if (block_row >= 0) {
        set.rows.push_back(block_row);
        in_working[static_cast<size_t>(block_row)] = true;
      }
      continue;
    }

    // Stationary on the working set: check multiplier signs.
    lambda_rows = row_multipliers(mw, g_free);
    const Vector row_force = nw > 0 ? Vector(qp.constraints.transpose() * [&] {
      Vector full = Vector::Zero(m);
      for (Index r = 0; r < nw; ++r) full(set.rows[static_cast<size_t>(r)]) = lambda_rows(r);
      return full;
    }())
                                    : Vector(Vector::Zero(n));
    const double mult_tol = 1e-10 * scale;
    double worst = -mult_tol;
    Index drop_row = -1, drop_var = -1;
    for (Index r = 0; r < nw; ++r) {
      if (lambda_rows(r) < worst) {
        worst = lambda_rows(r);
        drop_row = r;
        drop_var = -1;
      }
    }
    for (Index j = 0; j < n; ++j) {
      const Bound b = set.bounds[static_cast<size_t>(j)];
      if (b == Bound::Free || qp.upper(j) - qp.lower(j) <= 0.0) continue;
      const double reduced = g(j) + row_force(j);
      const double nu = b == Bound::AtLower ? reduced : -reduced;
      if (nu < worst) {
        worst = nu;
        drop_var = j;
        drop_row = -1;
      }
    }
    if (drop_row < 0 && drop_var < 0) {
      out.converged = true;
      break;
    }
    if (drop_row >= 0) {
      in_working[static_cast<size_t>(set.rows[static_cast<size_t>(drop_row)])] = false;
      set.rows.erase(set.rows.begin() + drop_row);
    } else {
      set.bounds[static_cast<size_t>(drop_var)] = Bound::Free;
      set.refresh_free();
    }
  }

  // Multipliers over all rows, clipped to the dual cone.
  Vector lambda = Vector::Zero(m);
  if (out.converged) {
    for (size_t r = 0; r < set.rows.size(); ++r) lambda(set.rows[r]) = std::max(lambda_rows(static_cast<Index>(r)), 0.0);
  }

  const Vector g = qp.hessian * z + qp.linear;
  const Vector reduced = g + qp.constraints.transpose() * lambda;
  double stationarity = 0.0;
  for (Index j = 0; j < n; ++j) {
    // Bound multipliers absorb the reduced gradient with the right sign.
    const bool at_lower = z(j) <= qp.lower(j);
    const bool at_upper = z(j) >= qp.upper(j);
    double v = reduced(j);
    if (at_lower && v > 0.0) v = 0.0;
    if (at_upper && v < 0.0) v = 0.0;
    stationarity = std::max(stationarity, std::abs(v));
  }
  double primal = 0.0, complementarity = 0.0;
  for (Index i = 0; i < m; ++i) {
    const double slack = qp.rhs(i) - qp.constraints.row(i).dot(z);
    primal = std::max(primal, -slack);
    complementarity = std::max(complementarity, std::abs(lambda(i) * slack));
  }
  const double dual = out.converged ? 0.0 : std::numeric_limits<double>::infinity();
  out.solution = z;
  out.value = qp.objective(z);
  out.multipliers = lambda;
  out.kkt_residual = std::max({stationarity, primal, complementarity, dual}) / (1.0 + g.lpNorm<Eigen::Infinity>());
  out.lower_bound = std::min(lower_bound_from(qp, z, lambda), out.value);
  return out;
}

}  // namespace gpcert
