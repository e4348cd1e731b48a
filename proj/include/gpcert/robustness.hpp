// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gpcert/bnb.hpp"
#include "gpcert/gp_model.hpp"
#include "gpcert/region.hpp"

namespace gpcert {

enum class Verdict { Certified, Falsified, Unknown };

std::string to_string(Verdict v);

constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Outcome of a robustness check at one point and radius.
///
/// Classification: `bound_lower`/`bound_upper` hold, for the predicted class,
/// the bracket of its minimum probability and, for every other class, the
/// bracket of its maximum. `pi_star` picks the worst certified end of each.
/// Regression: the brackets are per output, `pi_star` is the farther mean
/// corner.
struct SafetyVerdict {
  Verdict verdict = Verdict::Unknown;
  Index predicted = 0;
  Vector pi_star;
  Vector bound_lower;
  Vector bound_upper;
  Vector witness;  ///< set when falsified
  /// Width of the widest bracket left open when the verdict is Unknown.
  double gap = 0.0;
  double gamma = 0.0;
  double norm = kInfNorm;
  /// True when a non-l-inf ball was enclosed in its bounding box.
  bool bounding_box = false;
  int iterations = 0;
  double seconds = 0.0;
};

/// `norm` is the order p of the input ball (1, 2 or infinity).
SafetyVerdict certify_classification(const GpModel& model, const Vector& x, double gamma, const BnbConfig& config,
                                     double norm = kInfNorm);

/// Checks |mean(x) - mean(x')|_p <= delta for all x' with |x' - x|_p <= gamma.
SafetyVerdict certify_regression(const GpModel& model, const Vector& x, double gamma, double delta,
                                 const BnbConfig& config, double norm = kInfNorm);

/// Certified bracket [lower, upper] of a derived quantity plus a point value.
struct Estimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool converged = false;
};

/// Spread of the class-`cls` probability over the l-inf box: max - min.
/// `value` is the certified upper end, clipped to [0, 1].
Estimate delta_metric(const GpModel& model, const Vector& x, double gamma, const BnbConfig& config, Index cls = 0);

/// Change of the probability range along one dimension, comparing the boxes
/// [x, x + gamma e_i] and [x - gamma e_i, x]. `value` uses the bracket
/// midpoints.
Estimate interpretability_delta(const GpModel& model, const Vector& x, double gamma, Index dimension,
                                const BnbConfig& config, Index cls = 0);

struct InterpretabilityReport {
  double gamma = 0.0;
  std::vector<Index> dimensions;
  /// points x dimensions
  Matrix values;
  /// Column means of `values`.
  Vector mean;
};

InterpretabilityReport interpretability_report(const GpModel& model, const std::vector<Vector>& points, double gamma,
                                               const std::vector<Index>& dimensions, const BnbConfig& config,
                                               Index cls = 0);

struct AttackResult {
  Vector point;
  bool success = false;
  Index predicted = 0;  ///< class at `point`
  int steps_taken = 0;
};

/// Fast-gradient-sign attack on the latent mean inside the l-inf box, with
/// step gamma / steps. Binary models push the latent towards the other
/// class; multi-class models shrink the gap to the runner-up latent.
AttackResult gpfgs_attack(const GpModel& model, const Vector& x, double gamma, int steps = 20);

/// Gradient of the latent mean `output` at x.
Vector latent_mean_gradient(const GpModel& model, Index output, const Vector& x);

struct SafetyPoint {
  double gamma = 0.0;
  double min_lower = 0.0;
  double min_upper = 0.0;
  double max_lower = 0.0;
  double max_upper = 0.0;
  /// Bounds before nested tightening.
  double raw_min_lower = 0.0;
  double raw_max_upper = 0.0;
  /// Class probability at the GPFGS iterate.
  double attack = 0.0;
  bool converged = false;
};

/// Range of the probability of class `cls` over growing boxes. Each box
/// contains the smaller ones, so bounds are tightened across the ladder:
/// lower bounds of the minimum by a running max from the largest radius,
/// attained values by a running min from the smallest, and symmetrically
/// for the maximum.
std::vector<SafetyPoint> safety_curve(const GpModel& model, const Vector& x, std::vector<double> gammas,
                                      const BnbConfig& config, Index cls);

struct GapPoint {
  Index budget = 0;
  double lower = 0.0;  ///< certified lower bound of the gap
  double upper = 0.0;  ///< gap attained at a witness
  double raw_lower = 0.0;
  bool converged = false;
};

/// Certified minimum of pi_pred - max_{j != pred} pi_j when the first `beta`
/// features of `features` may move by gamma, for each beta in `budgets`.
/// A negative upper end means an adversarial example was found.
std::vector<GapPoint> adversarial_gap_curve(const GpModel& model, const Vector& x, const std::vector<Index>& features,
                                            double gamma, std::vector<Index> budgets, const BnbConfig& config);

/// Features ordered by decreasing |interpretability delta|.
std::vector<Index> rank_features(const Vector& deltas);

}  // namespace gpcert
