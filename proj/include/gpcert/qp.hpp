// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include "gpcert/region.hpp"

namespace gpcert {

/// minimize 1/2 z'Hz + c'z  subject to  A z <= b,  lower <= z <= upper,
/// with H symmetric positive semidefinite and a finite box.
struct QuadraticProgram {
  Matrix hessian;
  Vector linear;
  Matrix constraints;
  Vector rhs;
  Vector lower;
  Vector upper;

  Index variables() const { return linear.size(); }
  double objective(const Vector& z) const { return 0.5 * z.dot(hessian * z) + linear.dot(z); }
  void validate() const;
};

struct QpResult {
  bool converged = false;
  double value = 0.0;
  Vector solution;
  Vector multipliers;  ///< rows of A z <= b
  /// max of stationarity, primal, dual and complementarity violations,
  /// relative to 1 + |gradient|_inf at the solution.
  double kkt_residual = 0.0;
  /// Certified lower bound on the optimum (convexity plus weak duality with
  /// the returned multipliers).
  double lower_bound = 0.0;
  int iterations = 0;
};

/// Primal active-set method started from a vertex of the feasible set. Steps
/// are projected onto the null space of the working set; directions of zero
/// curvature are followed to the nearest blocking constraint.
QpResult solve_qp(const QuadraticProgram& program, int max_iterations = 5000);

}  // namespace gpcert
