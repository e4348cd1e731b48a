// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpcert {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr int kRefactorEvery = 64;
constexpr int kRefactorAfterSolve = 16;
constexpr int kDegenerateRunForBland = 30;

}  // namespace

void LinearProgram::validate() const {
  const Index n = objective.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("LP bounds must match variable count");
  if (constraints.rows() != rhs.size()) throw std::invalid_argument("LP rhs must match constraint rows");
  if (constraints.rows() > 0 && constraints.cols() != n) throw std::invalid_argument("LP constraint columns must match variables");
  for (Index j = 0; j < n; ++j) {
    if (!std::isfinite(lower(j)) || !std::isfinite(upper(j))) throw std::invalid_argument("LP variables need a finite box");
    if (lower(j) > upper(j)) throw std::invalid_argument("LP variable box is inverted");
  }
}

// Variables: [0, n) structural, [n, n+m) slacks (column e_i, [0, inf)),
// [n+m, n+2m) artificials (column -e_i, used in phase one only).
SimplexSolver::SimplexSolver(LinearProgram program, int max_iterations)
    : lp_(std::move(program)), max_iterations_(max_iterations) {
  lp_.validate();
  n_ = lp_.variables();
  m_ = lp_.rows();
  const Index total = n_ + 2 * m_;
  lower_ = Vector::Zero(total);
  upper_ = Vector::Zero(total);
  lower_.head(n_) = lp_.lower;
  upper_.head(n_) = lp_.upper;
  upper_.segment(n_, m_).setConstant(kInf);
  x_ = Vector::Zero(total);
  status_.assign(static_cast<size_t>(total), Status::AtLower);
  basis_.assign(static_cast<size_t>(m_), 0);
  x_.head(n_) = lp_.lower;
}

double SimplexSolver::column_dot(const Vector& y, Index j) const {
  if (j < n_) return lp_.constraints.col(j).dot(y);
  if (j < n_ + m_) return y(j - n_);
  return -y(j - n_ - m_);
}

void SimplexSolver::column(Index j, Vector& out) const {
  if (j < n_) {
    out = lp_.constraints.col(j);
    return;
  }
  out.setZero(m_);
  if (j < n_ + m_)
    out(j - n_) = 1.0;
  else
    out(j - n_ - m_) = -1.0;
}

void SimplexSolver::refactor() {
  Matrix b(m_, m_);
  Vector col;
  for (Index i = 0; i < m_; ++i) {
    column(basis_[static_cast<size_t>(i)], col);
    b.col(i) = col;
  }
  binv_ = b.partialPivLu().inverse();
  if (!binv_.allFinite()) throw std::runtime_error("LP basis became singular");
  // x_B = B^-1 (b - N x_N)
  Vector r = lp_.rhs;
  for (Index j = 0; j < n_ + 2 * m_; ++j) {
    if (status_[static_cast<size_t>(j)] == Status::Basic || x_(j) == 0.0) continue;
    column(j, col);
    r -= x_(j) * col;
  }
  const Vector xb = binv_ * r;
  for (Index i = 0; i < m_; ++i) x_(basis_[static_cast<size_t>(i)]) = xb(i);
  pivots_since_refactor_ = 0;
}

bool SimplexSolver::phase_one() {
  // Structural variables start at their lower bound; rows whose slack would
  // be negative get a basic artificial instead.
  const Vector r = lp_.rhs - lp_.constraints * lp_.lower;
  binv_ = Matrix::Zero(m_, m_);
  Vector cost = Vector::Zero(n_ + 2 * m_);
  bool any_artificial = false;
  for (Index i = 0; i < m_; ++i) {
    const Index slack = n_ + i;
    const Index art = n_ + m_ + i;
    if (r(i) >= 0.0) {
      basis_[static_cast<size_t>(i)] = slack;
      status_[static_cast<size_t>(slack)] = Status::Basic;
      x_(slack) = r(i);
      binv_(i, i) = 1.0;
      upper_(art) = 0.0;
    } else {
      basis_[static_cast<size_t>(i)] = art;
      status_[static_cast<size_t>(art)] = Status::Basic;
      status_[static_cast<size_t>(slack)] = Status::AtLower;
      x_(art) = -r(i);
      x_(slack) = 0.0;
      binv_(i, i) = -1.0;
      upper_(art) = kInf;
      cost(art) = 1.0;
      any_artificial = true;
    }
  }
  pivots_since_refactor_ = 0;
  if (any_artificial) {
    bool optimal = false;
    iterate(cost, max_iterations_, optimal);
    double infeas = 0.0;
    for (Index i = 0; i < m_; ++i) infeas += x_(n_ + m_ + i);
    const double scale = 1.0 + lp_.rhs.cwiseAbs().maxCoeff();
    if (!optimal || infeas > 1e-8 * scale) return false;
  }
  // Artificials are pinned at zero from here on.
  for (Index i = 0; i < m_; ++i) {
    const Index art = n_ + m_ + i;
    upper_(art) = 0.0;
    if (status_[static_cast<size_t>(art)] != Status::Basic) x_(art) = 0.0;
  }
  return true;
}

int SimplexSolver::iterate(const Vector& cost, int budget, bool& optimal) {
  const Index total = n_ + 2 * m_;
  const double cost_scale = 1.0 + cost.cwiseAbs().maxCoeff();
  const double opt_tol = 1e-10 * cost_scale;
  int iterations = 0;
  int degenerate_run = 0;
  Vector cb(m_), y(m_), w(m_), col(m_);
  Eigen::RowVectorXd pivot_row(m_);
  optimal = false;

  while (iterations < budget) {
    if (pivots_since_refactor_ >= kRefactorEvery) refactor();
    for (Index i = 0; i < m_; ++i) cb(i) = cost(basis_[static_cast<size_t>(i)]);
    y.noalias() = binv_.transpose() * cb;

    // Pricing.
    const bool bland = degenerate_run >= kDegenerateRunForBland;
    Index entering = -1;
    double best = 0.0;
    int direction = 0;
    const Vector d_struct = cost.head(n_) - lp_.constraints.transpose() * y;
    for (Index j = 0; j < total; ++j) {
      const Status s = status_[static_cast<size_t>(j)];
      if (s == Status::Basic || lower_(j) == upper_(j)) continue;
      const double d = j < n_ ? d_struct(j) : cost(j) - column_dot(y, j);
      int dir = 0;
      if (s == Status::AtLower && d < -opt_tol) dir = 1;
      if (s == Status::AtUpper && d > opt_tol) dir = -1;
      if (dir == 0) continue;
      if (bland) {
        entering = j;
        direction = dir;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        entering = j;
        direction = dir;
      }
    }
    if (entering < 0) {
      optimal = true;
      break;
    }

    column(entering, col);
    w.noalias() = binv_ * col;
    // Basic variable i moves by -direction * w_i per unit step.
    double theta = upper_(entering) - lower_(entering);
    Index leave_row = -1;
    bool leave_to_upper = false;
    // Pivots that are tiny next to the rest of the column make the basis
    // nearly singular; the weak-duality bound stays valid if we skip them.
    const double pivot_tol = kPivotTol * std::max(1.0, w.cwiseAbs().maxCoeff());
    for (Index i = 0; i < m_; ++i) {
      const double delta = -direction * w(i);
      if (std::abs(delta) <= pivot_tol) continue;
      const Index bv = basis_[static_cast<size_t>(i)];
      double ratio;
      bool to_upper;
      if (delta < 0.0) {
        ratio = (x_(bv) - lower_(bv)) / -delta;
        to_upper = false;
      } else {
        if (!std::isfinite(upper_(bv))) continue;
        ratio = (upper_(bv) - x_(bv)) / delta;
        to_upper = true;
      }
      ratio = std::max(ratio, 0.0);
      bool take = ratio < theta - 1e-12;
      if (!take && leave_row >= 0 && ratio <= theta + 1e-12) {
        // Ties: Bland picks the smallest variable index, otherwise the
        // largest pivot for stability.
        take = bland ? bv < basis_[static_cast<size_t>(leave_row)] : std::abs(delta) > std::abs(w(leave_row));
      }
      if (take) {
        theta = ratio;
        leave_row = i;
        leave_to_upper = to_upper;
      }
    }
    if (!std::isfinite(theta)) throw std::runtime_error("LP unbounded direction in a bounded program");

    degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
    ++iterations;
    x_(entering) += direction * theta;
    for (Index i = 0; i < m_; ++i) x_(basis_[static_cast<size_t>(i)]) -= direction * theta * w(i);

    if (leave_row < 0) {
      // Bound flip of the entering variable.
      status_[static_cast<size_t>(entering)] = direction > 0 ? Status::AtUpper : Status::AtLower;
      x_(entering) = direction > 0 ? upper_(entering) : lower_(entering);
      continue;
    }
    const Index leaving = basis_[static_cast<size_t>(leave_row)];
    status_[static_cast<size_t>(leaving)] = leave_to_upper ? Status::AtUpper : Status::AtLower;
    x_(leaving) = leave_to_upper ? upper_(leaving) : lower_(leaving);
    status_[static_cast<size_t>(entering)] = Status::Basic;
    basis_[static_cast<size_t>(leave_row)] = entering;

    binv_.row(leave_row) /= w(leave_row);
    pivot_row = binv_.row(leave_row);
    w(leave_row) = 0.0;
    binv_.noalias() -= w * pivot_row;
    ++pivots_since_refactor_;
  }
  return iterations;
}

LpResult SimplexSolver::finish(int iterations, bool optimal) const {
  LpResult res;
  res.iterations = iterations;
  res.status = optimal ? LpStatus::Optimal : LpStatus::IterationLimit;
  res.solution = x_.head(n_).cwiseMax(lp_.lower).cwiseMin(lp_.upper);
  res.value = lp_.objective.dot(res.solution);

  Vector cb(m_);
  for (Index i = 0; i < m_; ++i) {
    const Index bv = basis_[static_cast<size_t>(i)];
    cb(i) = bv < n_ ? lp_.objective(bv) : 0.0;
  }
  const Vector y = binv_.transpose() * cb;
  res.multipliers = (-y).cwiseMax(0.0);
  double residual = y.cwiseMax(0.0).maxCoeff();
  if (m_ == 0) residual = 0.0;

  // Weak duality: for lambda >= 0 and feasible x,
  // c'x >= min_box (c + A'lambda)'x - lambda'b.
  const Vector reduced = lp_.objective + lp_.constraints.transpose() * res.multipliers;
  double bound = -res.multipliers.dot(lp_.rhs);
  for (Index j = 0; j < n_; ++j) {
    bound += std::min(reduced(j) * lp_.lower(j), reduced(j) * lp_.upper(j));
    const Status s = status_[static_cast<size_t>(j)];
    const double d = lp_.objective(j) - lp_.constraints.col(j).dot(y);
    if (s == Status::Basic) residual = std::max(residual, std::abs(d));
    if (s == Status::AtLower && lp_.lower(j) < lp_.upper(j)) residual = std::max(residual, -d);
    if (s == Status::AtUpper && lp_.lower(j) < lp_.upper(j)) residual = std::max(residual, d);
  }
  res.dual_bound = std::min(bound, res.value);
  res.dual_residual = std::max(residual, 0.0) / (1.0 + lp_.objective.cwiseAbs().maxCoeff());
  return res;
}

LpResult SimplexSolver::solve() { return solve(lp_.objective); }

LpResult SimplexSolver::solve(const Vector& objective) {
  if (objective.size() != n_) throw std::invalid_argument("objective size differs from variable count");
  lp_.objective = objective;
  if (infeasible_) {
    LpResult r;
    r.status = LpStatus::Infeasible;
    return r;
  }
  int used = 0;
  if (!feasible_) {
    if (!phase_one()) {
      infeasible_ = true;
      LpResult r;
      r.status = LpStatus::Infeasible;
      return r;
    }
    feasible_ = true;
    refactor();
  }
  Vector cost = Vector::Zero(n_ + 2 * m_);
  cost.head(n_) = objective;
  bool optimal = false;
  used += iterate(cost, max_iterations_, optimal);
  // Fresh factors keep the reported multipliers accurate; a short run of
  // product-form updates is accurate enough.
  if (optimal && pivots_since_refactor_ > kRefactorAfterSolve) refactor();
  return finish(used, optimal);
}

LpResult solve_lp(const LinearProgram& program) {
  SimplexSolver solver(program);
  return solver.solve();
}

}  // namespace gpcert
