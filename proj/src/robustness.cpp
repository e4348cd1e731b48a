// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/robustness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/AutoDiff>

namespace gpcert {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double lp_norm(const Vector& v, double p) {
  if (std::isinf(p)) return v.lpNorm<Eigen::Infinity>();
  if (p == 1.0) return v.lpNorm<1>();
  if (p == 2.0) return v.norm();
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v(i)), p);
  return std::pow(s, 1.0 / p);
}

void check_norm(double p) {
  if (!(std::isinf(p) || p >= 1.0)) throw std::invalid_argument("norm order must be >= 1");
}

void check_point(const GpModel& model, const Vector& x, double gamma) {
  if (x.size() != model.dim()) throw std::invalid_argument("point dimension does not match the model");
  if (!(gamma >= 0.0)) throw std::invalid_argument("radius must be nonnegative");
}

// Candidates inside the ball: the point itself, or its radial projection.
std::vector<Vector> ball_candidates(const Vector& w, const Vector& x, double gamma, double p) {
  const double r = lp_norm(w - x, p);
  if (r <= gamma * (1.0 + 1e-12)) return {w};
  return {x + (gamma / r) * (w - x)};
}

Region one_sided(const Vector& x, Index dim, double gamma) {
  Vector lo = x;
  Vector hi = x;
  if (gamma >= 0.0) {
    hi(dim) += gamma;
  } else {
    lo(dim) += gamma;
  }
  return Region(lo, hi);
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified:
      return "certified";
    case Verdict::Falsified:
      return "falsified";
    case Verdict::Unknown:
      return "unknown";
  }
  return "unknown";
}

SafetyVerdict certify_classification(const GpModel& model, const Vector& x, double gamma, const BnbConfig& config,
                                     double norm) {
  if (model.task() == Task::Regression) throw std::invalid_argument("classification check on a regression model");
  check_point(model, x, gamma);
  check_norm(norm);
  const auto start = Clock::now();

  SafetyVerdict out;
  out.gamma = gamma;
  out.norm = norm;
  out.bounding_box = !std::isinf(norm) && gamma > 0.0 && model.dim() > 1;
  const Index pred = model.predict_class(x);
  out.predicted = pred;
  const Region box = Region::box(x, gamma);
  const Index k = model.classes();
  out.bound_lower = Vector::Zero(k);
  out.bound_upper = Vector::Ones(k);

  std::vector<Vector> witnesses;
  auto flips = [&](const Vector& w) {
    for (const Vector& c : ball_candidates(w, x, gamma, norm)) {
      if (model.predict_class(c) != pred) {
        out.witness = c;
        return true;
      }
    }
    return false;
  };
  auto record = [&](const BnbResult& r) {
    out.iterations += r.iterations;
    out.gap = std::max(out.gap, r.upper - r.lower);
  };

  if (model.task() == Task::BinaryClassification) {
    BnbConfig cfg = config;
    cfg.decision_level = 0.5;
    const BnbResult r = minimize_prediction(model, box, pred, cfg);
    record(r);
    out.bound_lower(pred) = r.lower;
    out.bound_upper(pred) = r.upper;
    out.bound_lower(1 - pred) = 1.0 - r.upper;
    out.bound_upper(1 - pred) = 1.0 - r.lower;
    witnesses.push_back(r.witness);
  } else {
    double rival = 0.0;
    for (Index j = 0; j < k; ++j) {
      if (j == pred) continue;
      const BnbResult r = maximize_prediction(model, box, j, config);
      record(r);
      out.bound_lower(j) = r.lower;
      out.bound_upper(j) = r.upper;
      rival = std::max(rival, r.upper);
      if (flips(r.witness)) {
        out.verdict = Verdict::Falsified;
        break;
      }
      witnesses.push_back(r.witness);
    }
    if (out.verdict != Verdict::Falsified) {
      BnbConfig cfg = config;
      cfg.decision_level = rival;
      const BnbResult r = minimize_prediction(model, box, pred, cfg);
      record(r);
      out.bound_lower(pred) = r.lower;
      out.bound_upper(pred) = r.upper;
      witnesses.push_back(r.witness);
    }
  }

  out.pi_star = out.bound_upper;
  out.pi_star(pred) = out.bound_lower(pred);
  if (out.verdict != Verdict::Falsified) {
    double rival = -1.0;
    for (Index j = 0; j < k; ++j)
      if (j != pred) rival = std::max(rival, out.pi_star(j));
    if (out.pi_star(pred) > rival) {
      out.verdict = Verdict::Certified;
    } else {
      for (const Vector& w : witnesses) {
        if (flips(w)) {
          out.verdict = Verdict::Falsified;
          break;
        }
      }
    }
  }
  if (out.verdict != Verdict::Unknown) out.gap = 0.0;
  out.seconds = seconds_since(start);
  return out;
}

SafetyVerdict certify_regression(const GpModel& model, const Vector& x, double gamma, double delta,
                                 const BnbConfig& config, double norm) {
  if (model.task() != Task::Regression) throw std::invalid_argument("regression check on a classifier");
  check_point(model, x, gamma);
  check_norm(norm);
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
  const auto start = Clock::now();

  SafetyVerdict out;
  out.gamma = gamma;
  out.norm = norm;
  out.bounding_box = !std::isinf(norm) && gamma > 0.0 && model.dim() > 1;
  const Index m = model.outputs();
  const Region box = Region::box(x, gamma);
  Vector centre(m);
  for (Index c = 0; c < m; ++c) centre(c) = model.latent_mean<double>(c, x);

  // Per-output decisions are exact only when the output norm separates.
  const bool separable = m == 1 || std::isinf(norm);
  out.bound_lower.resize(m);
  out.bound_upper.resize(m);
  out.pi_star.resize(m);
  std::vector<Vector> witnesses;
  for (Index c = 0; c < m; ++c) {
    BnbConfig cfg = config;
    if (separable) cfg.decision_level = centre(c) - delta;
    const BnbResult lo = minimize_posterior_mean(model, box, c, cfg);
    if (separable) cfg.decision_level = centre(c) + delta;
    const BnbResult hi = maximize_posterior_mean(model, box, c, cfg);
    for (const BnbResult* r : {&lo, &hi}) {
      out.iterations += r->iterations;
      out.gap = std::max(out.gap, r->upper - r->lower);
      witnesses.push_back(r->witness);
    }
    out.bound_lower(c) = lo.lower;
    out.bound_upper(c) = hi.upper;
    out.pi_star(c) = centre(c) - lo.lower >= hi.upper - centre(c) ? lo.lower : hi.upper;
  }

  auto violation = [&](const Vector& w) {
    Vector mean(m);
    for (Index c = 0; c < m; ++c) mean(c) = model.latent_mean<double>(c, w);
    return lp_norm(mean - centre, norm);
  };
  if (lp_norm(centre - out.pi_star, norm) <= delta) {
    out.verdict = Verdict::Certified;
  } else {
    for (const Vector& w : witnesses) {
      for (const Vector& c : ball_candidates(w, x, gamma, norm)) {
        if (violation(c) > delta) {
          out.verdict = Verdict::Falsified;
          out.witness = c;
          break;
        }
      }
      if (out.verdict == Verdict::Falsified) break;
    }
  }
  if (out.verdict != Verdict::Unknown) out.gap = 0.0;
  out.seconds = seconds_since(start);
  return out;
}

Estimate delta_metric(const GpModel& model, const Vector& x, double gamma, const BnbConfig& config, Index cls) {
  check_point(model, x, gamma);
  const Region box = Region::box(x, gamma);
  const BnbResult lo = minimize_prediction(model, box, cls, config);
  const BnbResult hi = maximize_prediction(model, box, cls, config);
  Estimate e;
  e.lower = std::max(0.0, hi.lower - lo.upper);
  e.upper = std::clamp(hi.upper - lo.lower, 0.0, 1.0);
  e.value = e.upper;
  e.converged = lo.converged && hi.converged;
  return e;
}

Estimate interpretability_delta(const GpModel& model, const Vector& x, double gamma, Index dimension,
                                const BnbConfig& config, Index cls) {
  check_point(model, x, gamma);
  if (dimension < 0 || dimension >= model.dim()) throw std::out_of_range("dimension out of range");
  const Region plus = one_sided(x, dimension, gamma);
  const Region minus = one_sided(x, dimension, -gamma);
  const BnbResult max_plus = maximize_prediction(model, plus, cls, config);
  const BnbResult max_minus = maximize_prediction(model, minus, cls, config);
  const BnbResult min_plus = minimize_prediction(model, plus, cls, config);
  const BnbResult min_minus = minimize_prediction(model, minus, cls, config);
  Estimate e;
  e.lower = (max_plus.lower - max_minus.upper) + (min_plus.lower - min_minus.upper);
  e.upper = (max_plus.upper - max_minus.lower) + (min_plus.upper - min_minus.lower);
  e.lower = std::max(e.lower, -2.0);
  e.upper = std::min(e.upper, 2.0);
  e.value = 0.5 * (e.lower + e.upper);
  e.converged = max_plus.converged && max_minus.converged && min_plus.converged && min_minus.converged;
  return e;
}

InterpretabilityReport interpretability_report(const GpModel& model, const std::vector<Vector>& points, double gamma,
                                               const std::vector<Index>& dimensions, const BnbConfig& config,
                                               Index cls) {
  InterpretabilityReport rep;
  rep.gamma = gamma;
  rep.dimensions = dimensions;
  const Index n = static_cast<Index>(points.size());
  const Index nd = static_cast<Index>(dimensions.size());
  rep.values = Matrix::Zero(n, nd);
  BnbConfig inner = config;
  inner.workers = 1;
  parallel_for(n * nd, config.workers, [&](Index k) {
    const Index p = k / nd;
    const Index j = k % nd;
    rep.values(p, j) = interpretability_delta(model, points[static_cast<size_t>(p)], gamma,
                                              dimensions[static_cast<size_t>(j)], inner, cls)
                           .value;
  });
  rep.mean = n > 0 ? Vector(rep.values.colwise().mean().transpose()) : Vector::Zero(nd);
  return rep;
}

Vector latent_mean_gradient(const GpModel& model, Index output, const Vector& x) {
  using Dual = Eigen::AutoDiffScalar<Vector>;
  const Index d = x.size();
  VectorX<Dual> xa(d);
  for (Index j = 0; j < d; ++j) xa(j) = Dual(x(j), d, j);
  const Dual v = model.latent_mean<Dual>(output, xa);
  if (v.derivatives().size() != d) return Vector::Zero(d);
  return v.derivatives();
}

AttackResult gpfgs_attack(const GpModel& model, const Vector& x, double gamma, int steps) {
  if (model.task() == Task::Regression) throw std::invalid_argument("attack needs a classifier");
  check_point(model, x, gamma);
  AttackResult res;
  res.point = x;
  const Index pred = model.predict_class(x);
  res.predicted = pred;
  if (gamma <= 0.0 || steps <= 0) return res;

  Index rival = 0;
  if (model.task() == Task::MultiClass) {
    const Vector p = model.predict_class_prob(x);
    double best = -1.0;
    for (Index j = 0; j < p.size(); ++j) {
      if (j != pred && p(j) > best) {
        best = p(j);
        rival = j;
      }
    }
  }
  const Region box = Region::box(x, gamma);
  const double step = gamma / steps;
  Vector cur = x;
  for (int s = 0; s < steps; ++s) {
    Vector dir;
    if (model.task() == Task::BinaryClassification) {
      // Class 0 is favoured by a large latent, so push it down.
      const double sign = pred == 0 ? -1.0 : 1.0;
      dir = sign * latent_mean_gradient(model, 0, cur);
    } else {
      dir = latent_mean_gradient(model, rival, cur) - latent_mean_gradient(model, pred, cur);
    }
    cur = box.clamp(cur + step * dir.unaryExpr([](double g) { return static_cast<double>((g > 0) - (g < 0)); }));
    res.steps_taken = s + 1;
    res.point = cur;
    res.predicted = model.predict_class(cur);
    if (res.predicted != pred) {
      res.success = true;
      break;
    }
  }
  return res;
}

std::vector<SafetyPoint> safety_curve(const GpModel& model, const Vector& x, std::vector<double> gammas,
                                      const BnbConfig& config, Index cls) {
  std::sort(gammas.begin(), gammas.end());
  std::vector<SafetyPoint> curve(gammas.size());
  BnbConfig inner = config;
  inner.workers = 1;
  parallel_for(static_cast<Index>(gammas.size()), config.workers, [&](Index k) {
    SafetyPoint& pt = curve[static_cast<size_t>(k)];
    pt.gamma = gammas[static_cast<size_t>(k)];
    const Region box = Region::box(x, pt.gamma);
    const BnbResult lo = minimize_prediction(model, box, cls, inner);
    const BnbResult hi = maximize_prediction(model, box, cls, inner);
    pt.min_lower = pt.raw_min_lower = lo.lower;
    pt.min_upper = lo.upper;
    pt.max_lower = hi.lower;
    pt.max_upper = pt.raw_max_upper = hi.upper;
    pt.converged = lo.converged && hi.converged;
    pt.attack = model.predict_class_prob(gpfgs_attack(model, x, pt.gamma).point)(cls);
  });
  for (size_t k = curve.size(); k-- > 1;) {
    curve[k - 1].min_lower = std::max(curve[k - 1].min_lower, curve[k].min_lower);
    curve[k - 1].max_upper = std::min(curve[k - 1].max_upper, curve[k].max_upper);
  }
  for (size_t k = 1; k < curve.size(); ++k) {
    curve[k].min_upper = std::min(curve[k].min_upper, curve[k - 1].min_upper);
    curve[k].max_lower = std::max(curve[k].max_lower, curve[k - 1].max_lower);
  }
  return curve;
}

std::vector<GapPoint> adversarial_gap_curve(const GpModel& model, const Vector& x, const std::vector<Index>& features,
                                            double gamma, std::vector<Index> budgets, const BnbConfig& config) {
  if (model.task() == Task::Regression) throw std::invalid_argument("gap curve needs a classifier");
  check_point(model, x, gamma);
  for (Index f : features)
    if (f < 0 || f >= model.dim()) throw std::out_of_range("feature index out of range");
  std::sort(budgets.begin(), budgets.end());
  const Index pred = model.predict_class(x);
  const Index k = model.classes();
  auto gap_at = [&](const Vector& w) {
    const Vector p = model.predict_class_prob(w);
    double rival = -1.0;
    for (Index j = 0; j < k; ++j)
      if (j != pred) rival = std::max(rival, p(j));
    return p(pred) - rival;
  };

  std::vector<GapPoint> curve(budgets.size());
  BnbConfig inner = config;
  inner.workers = 1;
  parallel_for(static_cast<Index>(budgets.size()), config.workers, [&](Index b) {
    GapPoint& pt = curve[static_cast<size_t>(b)];
    pt.budget = std::clamp<Index>(budgets[static_cast<size_t>(b)], 0, static_cast<Index>(features.size()));
    Vector lo = x;
    Vector hi = x;
    for (Index i = 0; i < pt.budget; ++i) {
      lo(features[static_cast<size_t>(i)]) -= gamma;
      hi(features[static_cast<size_t>(i)]) += gamma;
    }
    const Region region(lo, hi);
    const BnbResult own = minimize_prediction(model, region, pred, inner);
    pt.converged = own.converged;
    if (model.task() == Task::BinaryClassification) {
      pt.raw_lower = 2.0 * own.lower - 1.0;
      pt.upper = 2.0 * own.upper - 1.0;
    } else {
      double rival = 0.0;
      pt.upper = gap_at(own.witness);
      for (Index j = 0; j < k; ++j) {
        if (j == pred) continue;
        const BnbResult r = maximize_prediction(model, region, j, inner);
        rival = std::max(rival, r.upper);
        pt.upper = std::min(pt.upper, gap_at(r.witness));
        pt.converged = pt.converged && r.converged;
      }
      pt.raw_lower = own.lower - rival;
    }
    pt.lower = pt.raw_lower;
  });
  for (size_t i = curve.size(); i-- > 1;) curve[i - 1].lower = std::max(curve[i - 1].lower, curve[i].lower);
  for (size_t i = 1; i < curve.size(); ++i) curve[i].upper = std::min(curve[i].upper, curve[i - 1].upper);
  return curve;
}

std::vector<Index> rank_features(const Vector& deltas) {
  std::vector<Index> order(static_cast<size_t>(deltas.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(deltas(a)) > std::abs(deltas(b)); });
  return order;
}

}  // namespace gpcert
