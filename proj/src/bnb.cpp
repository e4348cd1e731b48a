// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/bnb.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <queue>
#include <stdexcept>
#include <thread>

namespace gpcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  Region region;
  double lower;
  std::uint64_t id;
};

// Lowest bound first, insertion order among equals.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.lower != b.lower) return a.lower > b.lower;
    return a.id > b.id;
  }
};

double sanitize(double v) { return std::isnan(v) ? -kInf : v; }

}  // namespace

void parallel_for(Index count, int workers, const std::function<void(Index)>& body) {
  if (count <= 0) return;
  const Index threads = std::min<Index>(std::max(workers, 1), count);
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  for (Index t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::pair<Region, Region> split_region(const Region& region, SplitRule rule, std::mt19937_64& rng) {
  std::vector<Index> dims;
  for (Index j = 0; j < region.dim(); ++j)
    if (region.upper(j) > region.lower(j)) dims.push_back(j);
  if (dims.empty()) throw std::invalid_argument("cannot split a zero-diameter region");
  Index j = dims.front();
  if (rule == SplitRule::Random) {
    // Odds proportional to width: a uniform pick keeps halving dimensions
    // that are already negligible, and best-first search then expands every
    // such useless split because its children keep the parent's bound.
    std::vector<double> widths;
    for (Index k : dims) widths.push_back(region.upper(k) - region.lower(k));
    std::discrete_distribution<size_t> pick(widths.begin(), widths.end());
    j = dims[pick(rng)];
  } else {
    for (Index k : dims)
      if (region.upper(k) - region.lower(k) > region.upper(j) - region.lower(j)) j = k;
  }
  return region.split(j);
}

BnbResult minimize(const std::vector<Region>& regions, const RegionBounder& bounder, const PointObjective& objective,
                   const BnbConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (regions.empty()) throw std::invalid_argument("branch and bound needs at least one region");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  std::mt19937_64 rng(config.seed);
  BnbResult out;
  double best_upper = kInf;
  auto consider = [&](const Vector& x) {
    const double v = objective(x);
    if (v < best_upper) {
      best_upper = v;
      out.witness = x;
    }
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> queue;
  std::uint64_t next_id = 0;
  for (const Region& r : regions) {
    consider(r.center());
    queue.push({r, -kInf, next_id++});
  }

  double closed_lower = kInf;
  double global_lower = -kInf;
  const int batch = std::max(config.batch, 1);
  while (true) {
    const double frontier = queue.empty() ? kInf : queue.top().lower;
    global_lower = std::max(global_lower, std::min(closed_lower, frontier));
    if (config.trace) out.trace.push_back({out.iterations, std::min(global_lower, best_upper), best_upper, queue.size()});
    if (best_upper - global_lower <= config.epsilon) {
      out.converged = true;
      break;
    }
    if (config.decision_level && (global_lower > *config.decision_level || best_upper < *config.decision_level)) {
      out.decided = true;
      break;
    }
    if (queue.empty() || out.iterations >= config.max_iterations || elapsed() >= config.max_seconds) break;

    std::vector<Node> work;
    while (!queue.empty() && static_cast<int>(work.size()) < batch) {
      Node n = queue.top();
      queue.pop();
      if (n.lower >= best_upper - config.epsilon) {
        closed_lower = std::min(closed_lower, n.lower);
        continue;
      }
      work.push_back(std::move(n));
    }
    if (work.empty()) continue;

    const double threshold = best_upper - config.epsilon;
    std::vector<RegionBound> bounds(work.size());
    parallel_for(static_cast<Index>(work.size()), config.workers, [&](Index k) {
      const Node& n = work[static_cast<size_t>(k)];
      try {
        bounds[static_cast<size_t>(k)] = bounder(n.region, threshold);
      } catch (const std::exception&) {
        // Unbounded here; splitting shrinks the region until bounding works.
        bounds[static_cast<size_t>(k)] = {n.lower, {n.region.center()}};
      }
    });
    for (size_t k = 0; k < work.size(); ++k) {
      ++out.iterations;
      ++out.regions_explored;
      work[k].lower = std::max(work[k].lower, sanitize(bounds[k].lower));
      for (const Vector& c : bounds[k].candidates) consider(work[k].region.clamp(c));
    }
    for (Node& n : work) {
      if (n.lower >= best_upper - config.epsilon || n.region.is_point()) {
        closed_lower = std::min(closed_lower, n.lower);
        continue;
      }
      auto [left, right] = split_region(n.region, config.split, rng);
      queue.push({std::move(left), n.lower, next_id++});
      queue.push({std::move(right), n.lower, next_id++});
    }
  }
  out.upper = best_upper;
  out.lower = std::min(global_lower, best_upper);
  out.seconds = elapsed();
  return out;
}

BnbResult maximize(const std::vector<Region>& regions, const RegionBounder& upper_bounder, const PointObjective& objective,
                   const BnbConfig& config) {
  BnbConfig negated = config;
  if (config.decision_level) negated.decision_level = -*config.decision_level;
  BnbResult r = minimize(regions, upper_bounder, [&objective](const Vector& x) { return -objective(x); }, negated);
  std::swap(r.lower, r.upper);
  r.lower = -r.lower;
  r.upper = -r.upper;
  for (TraceRecord& t : r.trace) {
    std::swap(t.lower, t.upper);
    t.lower = -t.lower;
    t.upper = -t.upper;
  }
  return r;
}

std::vector<Vector> witness_candidates(const GpModel& model, const Region& region, const BoundOptions& options) {
  std::vector<Vector> out{region.center()};
  for (Index c = 0; c < model.outputs(); ++c) {
    const RegionKernelBounds kb(model, region, c, options.relaxations);
    const MeanBound mb = bound_mean(model, kb);
    const VarianceBound vb = bound_variance(model, kb, true, true, options);
    for (const Vector* w : {&mb.argmin, &mb.argmax, &vb.argmin, &vb.argmax}) out.push_back(region.clamp(*w));
  }
  return out;
}

RegionBounder prediction_bounder(const GpModel& model, Index cls, bool upper, const BnbConfig& config) {
  if (model.task() == Task::Regression) throw std::invalid_argument("prediction ranges need a classifier");
  if (cls < 0 || cls >= model.classes()) throw std::out_of_range("class index out of range");

  if (model.task() == Task::BinaryClassification) {
    // Class 0 is pi, class 1 is 1 - pi. `want_high` is whether the engine
    // value uses the upper end of pi.
    const bool want_high = (cls == 1) != upper;
    auto value = [cls, upper](const Interval& p) {
      const double pi_lo = cls == 0 ? p.lo : 1.0 - p.hi;
      const double pi_hi = cls == 0 ? p.hi : 1.0 - p.lo;
      return upper ? -pi_hi : pi_lo;
    };
    return [&model, config, want_high, value](const Region& region, double threshold) {
      RegionBound rb;
      rb.candidates.push_back(region.center());
      const RegionKernelBounds cheap(model, region, 0, false);
      const MeanBound mb = bound_mean(model, cheap);
      rb.candidates.push_back(mb.argmin);
      rb.candidates.push_back(mb.argmax);
      const VarianceBound vi = bound_variance_interval(model, cheap);
      rb.lower = value(binary_range_bounds(model.link(), mb.value, {vi.lower, vi.upper}));
      if (rb.lower >= threshold || !config.bounds.relaxations || region.is_point()) return rb;

      // Refine only the variance end point the corner rule selects.
      const double mean_end = want_high ? mb.value.hi : mb.value.lo;
      const bool uses_upper_var = want_high ? mean_end < 0.0 : mean_end >= 0.0;
      const RegionKernelBounds full(model, region, 0, true);
      const VarianceBound vb = bound_variance(model, full, !uses_upper_var, uses_upper_var, config.bounds);
      rb.lower = std::max(rb.lower, value(binary_range_bounds(model.link(), mb.value, {vb.lower, vb.upper})));
      rb.candidates.push_back(vb.argmin);
      rb.candidates.push_back(vb.argmax);
      return rb;
    };
  }

  const Index cells = config.partition_cells > 0 ? config.partition_cells : static_cast<Index>(std::ceil(2.0 / config.epsilon));
  const LatentPartition partition = build_partition(cells, Link{Link::Kind::Logistic, 1.0});
  return [&model, config, partition, cls, upper](const Region& region, double threshold) {
    RegionBound rb;
    BoundOptions cheap_options = config.bounds;
    cheap_options.relaxations = false;
    MomentBounds mb = bound_moments(model, region, cheap_options);
    auto value = [&](const MomentBounds& m) {
      const Interval p = multiclass_range_bounds(m, partition)[static_cast<size_t>(cls)];
      return upper ? -p.hi : p.lo;
    };
    rb.lower = value(mb);
    rb.candidates = mb.witnesses;
    if (rb.lower >= threshold || !config.bounds.relaxations || region.is_point()) return rb;
    mb = bound_moments(model, region, config.bounds);
    rb.lower = std::max(rb.lower, value(mb));
    rb.candidates.insert(rb.candidates.end(), mb.witnesses.begin(), mb.witnesses.end());
    return rb;
  };
}

BnbResult minimize_prediction(const GpModel& model, const Region& region, Index cls, const BnbConfig& config) {
  const RegionBounder bounder = prediction_bounder(model, cls, false, config);
  return minimize({region}, bounder, [&model, cls](const Vector& x) { return model.predict_class_prob(x)(cls); }, config);
}

BnbResult maximize_prediction(const GpModel& model, const Region& region, Index cls, const BnbConfig& config) {
  const RegionBounder bounder = prediction_bounder(model, cls, true, config);
  return maximize({region}, bounder, [&model, cls](const Vector& x) { return model.predict_class_prob(x)(cls); }, config);
}

namespace {

RegionBounder mean_bounder(const GpModel& model, Index output, bool upper) {
  if (output < 0 || output >= model.outputs()) throw std::out_of_range("output index out of range");
  return [&model, output, upper](const Region& region, double) {
    const MeanBound mb = bound_mean(model, region, output);
    return RegionBound{upper ? -mb.value.hi : mb.value.lo, {region.center(), mb.argmin, mb.argmax}};
  };
}

}  // namespace

BnbResult minimize_posterior_mean(const GpModel& model, const Region& region, Index output, const BnbConfig& config) {
  return minimize({region}, mean_bounder(model, output, false),
                  [&model, output](const Vector& x) { return model.latent_mean<double>(output, x); }, config);
}

BnbResult maximize_posterior_mean(const GpModel& model, const Region& region, Index output, const BnbConfig& config) {
  return maximize({region}, mean_bounder(model, output, true),
                  [&model, output](const Vector& x) { return model.latent_mean<double>(output, x); }, config);
}

}  // namespace gpcert
