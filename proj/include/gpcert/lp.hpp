// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <vector>

#include "gpcert/region.hpp"

namespace gpcert {

/// minimize c'x  subject to  A x <= b,  lower <= x <= upper (finite box).
struct LinearProgram {
  Vector objective;
  Matrix constraints;
  Vector rhs;
  Vector lower;
  Vector upper;

  Index variables() const { return objective.size(); }
  Index rows() const { return constraints.rows(); }
  /// Throws std::invalid_argument on inconsistent shapes or infinite bounds.
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  double value = 0.0;
  Vector solution;
  /// Multipliers of the rows A x <= b (nonnegative at optimum).
  Vector multipliers;
  /// Weak-duality lower bound on the optimum computed from `multipliers`;
  /// valid whatever the solver's accuracy.
  double dual_bound = 0.0;
  /// Largest violation of dual feasibility (reduced-cost signs).
  double dual_residual = 0.0;
  int iterations = 0;
};

/// Dense bounded-variable revised simplex. Dantzig pricing with a switch to
/// Bland's rule after a run of degenerate pivots. The basis is kept between
/// solves so a sequence of objectives over one feasible set warm-starts.
class SimplexSolver {
 public:
  explicit SimplexSolver(LinearProgram program, int max_iterations = 20000);

  LpResult solve();
  LpResult solve(const Vector& objective);

  const LinearProgram& program() const { return lp_; }

 private:
  enum class Status : unsigned char { Basic, AtLower, AtUpper };

  bool phase_one();
  int iterate(const Vector& cost, int budget, bool& optimal);
  void refactor();
  double column_dot(const Vector& y, Index j) const;
  void column(Index j, Vector& out) const;
  LpResult finish(int iterations, bool optimal) const;

  LinearProgram lp_;
  int max_iterations_;
  Index n_ = 0;
  Index m_ = 0;
  Vector lower_;
  Vector upper_;
  Vector x_;
  std::vector<Status> status_;
  std::vector<Index> basis_;
  Matrix binv_;
  bool feasible_ = false;
  bool infeasible_ = false;
  int pivots_since_refactor_ = 0;
};

LpResult solve_lp(const LinearProgram& program);

}  // namespace gpcert
