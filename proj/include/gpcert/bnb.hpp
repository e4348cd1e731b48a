// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "gpcert/bounds.hpp"
#include "gpcert/gp_model.hpp"
#include "gpcert/likelihood.hpp"
#include "gpcert/region.hpp"

namespace gpcert {

/// Random halves a dimension drawn with odds proportional to its width.
enum class SplitRule { Random, WidestDimension };

struct BnbConfig {
  double epsilon = 0.01;
  int max_iterations = 10000;
  double max_seconds = 600.0;
  SplitRule split = SplitRule::Random;
  /// Cells per latent coordinate for discretized bounds; 0 picks ceil(2/eps).
  Index partition_cells = 0;
  std::uint64_t seed = 0;
  /// Regions bounded per round. Fixed independently of `workers` so that
  /// results do not depend on the thread count.
  int batch = 1;
  int workers = 1;
  bool trace = false;
  /// Stop as soon as [lower, upper] lies strictly on one side of this level
  /// (in the sense of the original objective). Used when only a decision
  /// against a threshold is needed.
  std::optional<double> decision_level;
  BoundOptions bounds;
};

struct TraceRecord {
  int iteration = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t regions = 0;
};

struct BnbResult {
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
  std::size_t regions_explored = 0;
  double seconds = 0.0;
  Vector witness;  ///< point attaining `upper` (minimization sense)
  bool converged = false;
  /// Terminated by `decision_level` before reaching the tolerance.
  bool decided = false;
  std::vector<TraceRecord> trace;
};

/// Result of bounding one region: a lower bound on the objective over the
/// region and points worth evaluating.
struct RegionBound {
  double lower = 0.0;
  std::vector<Vector> candidates;
};

/// `close_threshold` is the value above which the engine discards the region;
/// bounders may stop refining once their lower bound exceeds it.
using RegionBounder = std::function<RegionBound(const Region& region, double close_threshold)>;
using PointObjective = std::function<double(const Vector& x)>;

/// Best-first branch and bound for the minimum of `objective` over the union
/// of `regions`. Anytime: on budget exhaustion the current bounds are
/// returned with `converged` false.
BnbResult minimize(const std::vector<Region>& regions, const RegionBounder& bounder, const PointObjective& objective,
                   const BnbConfig& config);
/// Maximum via the minimum of the negation; `lower`/`upper` are in the
/// original sense and `witness` attains `lower`.
BnbResult maximize(const std::vector<Region>& regions, const RegionBounder& upper_bounder,
                   const PointObjective& objective, const BnbConfig& config);

/// Halves the region along a dimension chosen by `rule`. Throws
/// std::invalid_argument on a zero-diameter region.
std::pair<Region, Region> split_region(const Region& region, SplitRule rule, std::mt19937_64& rng);

/// Mean and variance extremal points of the relaxations plus the centre.
std::vector<Vector> witness_candidates(const GpModel& model, const Region& region, const BoundOptions& options = {});

/// Range of the probability of class `cls` over the region.
BnbResult minimize_prediction(const GpModel& model, const Region& region, Index cls, const BnbConfig& config);
BnbResult maximize_prediction(const GpModel& model, const Region& region, Index cls, const BnbConfig& config);

/// Range of latent mean `output` over the region.
BnbResult minimize_posterior_mean(const GpModel& model, const Region& region, Index output, const BnbConfig& config);
BnbResult maximize_posterior_mean(const GpModel& model, const Region& region, Index output, const BnbConfig& config);

/// Region bounder for the class probability used by the prediction searches.
/// `upper` selects an upper bound on the maximum instead of a lower bound on
/// the minimum (returned negated, as the engine minimizes).
RegionBounder prediction_bounder(const GpModel& model, Index cls, bool upper, const BnbConfig& config);

/// Runs body(0..count-1) on up to `workers` threads. Exceptions from the
/// body are rethrown (the first by index).
void parallel_for(Index count, int workers, const std::function<void(Index)>& body);

}  // namespace gpcert
