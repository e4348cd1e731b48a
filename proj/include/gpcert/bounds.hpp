// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <vector>

#include "gpcert/gp_model.hpp"
#include "gpcert/interval.hpp"
#include "gpcert/region.hpp"

namespace gpcert {

struct BoundOptions {
  /// Points entering the QP/LP relaxations explicitly. The rest of the
  /// quadratic form is enclosed with a centered interval form.
  Index active_points = 32;
  /// Solve the QP/LP relaxations; otherwise only interval enclosures.
  bool relaxations = true;
  /// Compute rotated-coordinate ranges with 2 LPs each (interval ranges
  /// are always computed and intersected in).
  bool range_lps = true;
};

struct MeanBound {
  Interval value;
  Vector argmin;  ///< candidate minimizer of the mean in the region
  Vector argmax;
};

struct VarianceBound {
  double lower = 0.0;
  double upper = 0.0;
  /// Lower bound before clipping at zero (diagnostics).
  double lower_unclipped = 0.0;
  Vector argmin;
  Vector argmax;
};

/// Per-output mean and covariance enclosures over one region.
struct MomentBounds {
  Vector mean_lower;
  Vector mean_upper;
  Matrix cov_lower;
  Matrix cov_upper;
  std::vector<Vector> witnesses;
};

/// Kernel bounds of every training point for one output on one region,
/// shared between the mean and variance computations.
class RegionKernelBounds {
 public:
  RegionKernelBounds(const GpModel& model, const Region& region, Index output, bool with_dims);

  const Region& region() const { return region_; }
  Index output() const { return output_; }
  const std::vector<AnchorBound>& anchors() const { return anchors_; }
  /// Enclosure of k(x, x_i).
  Interval value(Index i) const { return anchors_[static_cast<size_t>(i)].kernel.value; }
  Interval diagonal() const { return diagonal_; }
  bool has_dims() const { return with_dims_; }

 private:
  Region region_;
  Index output_;
  bool with_dims_;
  std::vector<AnchorBound> anchors_;
  Interval diagonal_;
};

MeanBound bound_mean(const GpModel& model, const RegionKernelBounds& kb);
MeanBound bound_mean(const GpModel& model, const Region& region, Index output = 0);

/// Interval-only variance enclosure (cheap, always valid).
VarianceBound bound_variance_interval(const GpModel& model, const RegionKernelBounds& kb);

/// Variance bounds tightened with the QP (upper) and LP (lower) relaxations;
/// only the requested sides are refined. `kb` must carry per-dimension data.
VarianceBound bound_variance(const GpModel& model, const RegionKernelBounds& kb, bool need_lower, bool need_upper,
                             const BoundOptions& options = {});

double bound_variance_upper(const GpModel& model, const Region& region, Index output = 0, const BoundOptions& options = {});
double bound_variance_lower(const GpModel& model, const Region& region, Index output = 0, const BoundOptions& options = {});

/// Enclosure of the off-diagonal posterior covariance between outputs i and j
/// (i != j). For i == j this returns the variance bounds.
Interval bound_cross_covariance(const GpModel& model, const RegionKernelBounds& ki, const RegionKernelBounds& kj);
Interval bound_cross_covariance(const GpModel& model, const Region& region, Index i, Index j, const BoundOptions& options = {});

/// All moments for all outputs, with the relaxations applied to both sides.
MomentBounds bound_moments(const GpModel& model, const Region& region, const BoundOptions& options = {});

}  // namespace gpcert
