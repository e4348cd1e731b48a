// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <vector>

#include "gpcert/bounds.hpp"
#include "gpcert/gp_model.hpp"
#include "gpcert/interval.hpp"

namespace gpcert {

/// Certified prediction range of one class over a region.
struct RangeBounds {
  double min_lower = 0.0;  ///< <= min over the region
  double min_upper = 1.0;  ///< >= min (attained at a witness)
  double max_lower = 0.0;  ///< <= max (attained at a witness)
  double max_upper = 1.0;  ///< >= max over the region
  Vector min_witness;
  Vector max_witness;
};

/// Enclosure of the class-1 probability over all latent Gaussians with mean
/// in `mean` and variance in `variance`, for the probit link.
Interval probit_range_bounds(const Interval& mean, const Interval& variance, double lambda);

/// Same for the logistic link; the integral uses 64-node Gauss-Hermite.
Interval logistic_range_bounds(const Interval& mean, const Interval& variance);

Interval binary_range_bounds(const Link& link, const Interval& mean, const Interval& variance);

/// Ordered cells (-inf, b_1], [b_1, b_2], ..., [b_{M-1}, inf) of equal link
/// mass 1/M.
class LatentPartition {
 public:
  LatentPartition() = default;
  explicit LatentPartition(std::vector<double> breakpoints) : breaks_(std::move(breakpoints)) {}

  Index cells() const { return static_cast<Index>(breaks_.size()) + 1; }
  double lower(Index l) const;
  double upper(Index l) const;
  const std::vector<double>& breakpoints() const { return breaks_; }

 private:
  std::vector<double> breaks_;
};

/// Breakpoints sigma^-1(l / M) for l = 1..M-1. Probit uses Phi^-1(l/M) / lambda.
LatentPartition build_partition(Index cells, const Link& link);
/// M = ceil(2 / epsilon).
LatentPartition build_partition(double epsilon, const Link& link);

/// Range of P(a <= z <= b) for z ~ N(mu, var) over the box of (mu, var).
/// Infinite a, b and infinite mean ranges are allowed. Variances below 1e-12
/// are raised to it.
Interval gaussian_integral_extrema(const Interval& mean, const Interval& variance, double a, double b);

/// Binary class-1 probability enclosure from the partition sum.
Interval discretized_binary_bounds(const Link& link, const Interval& mean, const Interval& variance,
                                   const LatentPartition& partition);

struct ConditionalMoments {
  Interval mean;
  Interval variance;
};

/// Enclosure of the moments of latent `k` conditioned on latents k+1..m-1
/// lying in `box` (one interval per conditioning latent), given moment
/// bounds of the joint. Throws std::domain_error if the conditioning
/// covariance cannot be inverted in interval arithmetic.
ConditionalMoments conditional_moment_bounds(const MomentBounds& moments, const std::vector<Interval>& box, Index k);

/// Softmax class-probability enclosures for every class, from M cells per
/// latent coordinate. Throws std::length_error if M^m exceeds `cell_cap`.
std::vector<Interval> multiclass_range_bounds(const MomentBounds& moments, const LatentPartition& partition,
                                              Index cell_cap = 2000000);

/// Class-probability enclosures from moment bounds, dispatched on the task.
/// Binary models use the closed-form corner rules.
std::vector<Interval> class_probability_bounds(const GpModel& model, const MomentBounds& moments,
                                               const LatentPartition& partition);

}  // namespace gpcert
