// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gpcert/linalg.hpp"

namespace gpcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kVarianceFloor = 1e-12;

double sigmoid(double f) {
  if (f == kInf) return 1.0;
  if (f == -kInf) return 0.0;
  return f >= 0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

double link_value(const Link& link, double f) {
  if (link.kind == Link::Kind::Probit) return f == kInf ? 1.0 : f == -kInf ? 0.0 : normal_cdf(link.lambda * f);
  return sigmoid(f);
}

// P(z <= limit) for z ~ N(mu, s^2), with infinite limit or mean.
double below(double limit, double mu, double s) {
  if (limit == kInf) return 1.0;
  if (limit == -kInf) return 0.0;
  if (mu == kInf) return 0.0;
  if (mu == -kInf) return 1.0;
  return normal_cdf((limit - mu) / s);
}

// P(z >= limit).
double above(double limit, double mu, double s) {
  if (limit == -kInf) return 1.0;
  if (limit == kInf) return 0.0;
  if (mu == kInf) return 1.0;
  if (mu == -kInf) return 0.0;
  return normal_cdf((mu - limit) / s);
}

double cell_mass(double mu, double var, double a, double b) {
  const double s = std::sqrt(var);
  // Subtract on the side with the smaller tail to avoid cancellation.
  const double centre = std::isfinite(mu) ? mu : 0.0;
  if (std::isfinite(a) && a > centre) return std::max(above(a, mu, s) - above(b, mu, s), 0.0);
  return std::max(below(b, mu, s) - below(a, mu, s), 0.0);
}

Interval floored(const Interval& v) {
  const double lo = std::max(v.lo, kVarianceFloor);
  return {lo, std::max(v.hi, lo)};
}

double softmax_corner(const std::vector<double>& xi, Index cls) {
  const double own = xi[static_cast<size_t>(cls)];
  if (own == kInf) return 1.0;
  if (own == -kInf) return 0.0;
  double denom = 1.0;
  for (size_t j = 0; j < xi.size(); ++j) {
    if (static_cast<Index>(j) == cls) continue;
    if (xi[j] == kInf) return 0.0;
    if (xi[j] == -kInf) continue;
    denom += std::exp(xi[j] - own);
  }
  return 1.0 / denom;
}

}  // namespace

Interval probit_range_bounds(const Interval& mean, const Interval& variance, double lambda) {
  const double base = 1.0 / (lambda * lambda);
  const double vlo = std::max(variance.lo, 0.0);
  const double vhi = std::max(variance.hi, vlo);
  // A nonnegative mean is pulled towards 1/2 by a larger variance, a negative
  // one pushed away, so each extreme sits at a variance end point.
  const double var_min = mean.lo >= 0.0 ? vhi : vlo;
  const double var_max = mean.hi >= 0.0 ? vlo : vhi;
  return {normal_cdf(mean.lo / std::sqrt(base + var_min)), normal_cdf(mean.hi / std::sqrt(base + var_max))};
}

Interval logistic_range_bounds(const Interval& mean, const Interval& variance) {
  const double vlo = std::max(variance.lo, 0.0);
  const double vhi = std::max(variance.hi, vlo);
  const double var_min = mean.lo >= 0.0 ? vhi : vlo;
  const double var_max = mean.hi >= 0.0 ? vlo : vhi;
  auto pi = [](double mu, double var) { return gaussian_expectation(sigmoid, mu, var); };
  return {pi(mean.lo, var_min), pi(mean.hi, var_max)};
}

Interval binary_range_bounds(const Link& link, const Interval& mean, const Interval& variance) {
  switch (link.kind) {
    case Link::Kind::Probit:
      return probit_range_bounds(mean, variance, link.lambda);
    case Link::Kind::Logistic:
      return logistic_range_bounds(mean, variance);
    case Link::Kind::Softmax:
      break;
  }
  throw std::invalid_argument("binary bounds need a probit or logistic link");
}

double LatentPartition::lower(Index l) const { return l == 0 ? -kInf : breaks_[static_cast<size_t>(l - 1)]; }

double LatentPartition::upper(Index l) const { return l + 1 == cells() ? kInf : breaks_[static_cast<size_t>(l)]; }

LatentPartition build_partition(Index cells, const Link& link) {
  if (cells < 1) throw std::invalid_argument("partition needs at least one cell");
  std::vector<double> br;
  for (Index l = 1; l < cells; ++l) {
    const double p = static_cast<double>(l) / static_cast<double>(cells);
    br.push_back(link.kind == Link::Kind::Probit ? normal_quantile(p) / link.lambda : std::log(p / (1.0 - p)));
  }
  return LatentPartition(std::move(br));
}

LatentPartition build_partition(double epsilon, const Link& link) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  return build_partition(static_cast<Index>(std::ceil(2.0 / epsilon)), link);
}

Interval gaussian_integral_extrema(const Interval& mean, const Interval& variance, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("invalid cell");
  const Interval v = floored(variance);

  // For fixed variance the mass is symmetric and unimodal in the mean around
  // the cell centre; for fixed mean it is monotone or unimodal in the
  // variance. The minimum is therefore at a corner.
  double lo = kInf;
  for (double mu : {mean.lo, mean.hi})
    for (double var : {v.lo, v.hi}) lo = std::min(lo, cell_mass(mu, var, a, b));

  double centre;
  if (std::isfinite(a) && std::isfinite(b)) centre = 0.5 * (a + b);
  else if (std::isfinite(a)) centre = kInf;
  else if (std::isfinite(b)) centre = -kInf;
  else centre = 0.0;
  const double mu = std::clamp(centre, mean.lo, mean.hi);
  std::vector<double> vars{v.lo, v.hi};
  if (std::isfinite(mu) && std::isfinite(a) && std::isfinite(b) && (mu < a || mu > b)) {
    const double da = mu - a, db = mu - b;
    const double crit = (da * da - db * db) / (2.0 * std::log(da / db));
    if (std::isfinite(crit)) vars.push_back(std::clamp(crit, v.lo, v.hi));
  }
  double hi = 0.0;
  for (double var : vars) hi = std::max(hi, cell_mass(mu, var, a, b));
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

Interval discretized_binary_bounds(const Link& link, const Interval& mean, const Interval& variance,
                                   const LatentPartition& partition) {
  double lo = 0.0, hi = 0.0;
  for (Index l = 0; l < partition.cells(); ++l) {
    const double a = partition.lower(l), b = partition.upper(l);
    const Interval mass = gaussian_integral_extrema(mean, variance, a, b);
    lo += link_value(link, a) * mass.lo;
    hi += link_value(link, b) * mass.hi;
  }
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

namespace {

// Pieces of the conditional moments that do not depend on the latent box:
// w = Sigma_II^-1 Sigma_Ik and the conditional variance.
struct Conditioner {
  Index k = 0;
  std::vector<Interval> weights;
  Interval variance;
  Interval mean;
  std::vector<Interval> cond_means;

  Interval conditional_mean(const std::vector<Interval>& box) const {
    Interval m = mean;
    for (size_t j = 0; j < weights.size(); ++j) m += weights[j] * (box[j] - cond_means[j]);
    return m;
  }
};

Conditioner make_conditioner(const MomentBounds& mb, Index k) {
  const Index m = mb.mean_lower.size();
  const Index ni = m - k - 1;
  Conditioner c;
  c.k = k;
  c.mean = {mb.mean_lower(k), mb.mean_upper(k)};
  const Interval var_kk(mb.cov_lower(k, k), mb.cov_upper(k, k));
  for (Index j = 0; j < ni; ++j) c.cond_means.emplace_back(mb.mean_lower(k + 1 + j), mb.mean_upper(k + 1 + j));
  if (ni == 0) {
    c.variance = floored(var_kk);
    return c;
  }
  IntervalMatrix sii(ni, ni), sik(ni, 1);
  for (Index a = 0; a < ni; ++a) {
    sik(a, 0) = Interval(mb.cov_lower(k + 1 + a, k), mb.cov_upper(k + 1 + a, k));
    for (Index b = 0; b < ni; ++b) sii(a, b) = Interval(mb.cov_lower(k + 1 + a, k + 1 + b), mb.cov_upper(k + 1 + a, k + 1 + b));
  }
  const IntervalMatrix w = interval_solve(sii, sik);
  Interval var = var_kk;
  for (Index a = 0; a < ni; ++a) {
    c.weights.push_back(w(a, 0));
    var -= sik(a, 0) * w(a, 0);
  }
  // Conditioning never increases a variance.
  var.hi = std::min(var.hi, var_kk.hi);
  c.variance = floored(var);
  return c;
}

}  // namespace

ConditionalMoments conditional_moment_bounds(const MomentBounds& moments, const std::vector<Interval>& box, Index k) {
  const Index m = moments.mean_lower.size();
  if (k < 0 || k >= m) throw std::out_of_range("latent index out of range");
  if (static_cast<Index>(box.size()) != m - k - 1) throw std::invalid_argument("one box interval per conditioning latent");
  const Conditioner c = make_conditioner(moments, k);
  return {c.conditional_mean(box), c.variance};
}

std::vector<Interval> multiclass_range_bounds(const MomentBounds& moments, const LatentPartition& partition, Index cell_cap) {
  const Index m = moments.mean_lower.size();
  const Index cells = partition.cells();
  double total = 1.0;
  for (Index k = 0; k < m; ++k) total *= static_cast<double>(cells);
  if (total > static_cast<double>(cell_cap)) throw std::length_error("latent partition exceeds the cell cap");

  std::vector<Conditioner> cond;
  for (Index k = 0; k < m; ++k) cond.push_back(make_conditioner(moments, k));

  std::vector<double> lower(static_cast<size_t>(m), 0.0), upper(static_cast<size_t>(m), 0.0);
  std::vector<Index> choice(static_cast<size_t>(m), 0);

  // Depth-first over coordinates m-1 (outermost) down to 0.
  auto recurse = [&](auto&& self, Index k, double p_lo, double p_hi) -> void {
    if (k < 0) {
      for (Index i = 0; i < m; ++i) {
        std::vector<double> corner_lo(static_cast<size_t>(m)), corner_hi(static_cast<size_t>(m));
        for (Index j = 0; j < m; ++j) {
          const Index l = choice[static_cast<size_t>(j)];
          corner_lo[static_cast<size_t>(j)] = j == i ? partition.lower(l) : partition.upper(l);
          corner_hi[static_cast<size_t>(j)] = j == i ? partition.upper(l) : partition.lower(l);
        }
        lower[static_cast<size_t>(i)] += softmax_corner(corner_lo, i) * p_lo;
        upper[static_cast<size_t>(i)] += softmax_corner(corner_hi, i) * p_hi;
      }
      return;
    }
    std::vector<Interval> box;
    for (Index j = k + 1; j < m; ++j) {
      const Index l = choice[static_cast<size_t>(j)];
      box.emplace_back(partition.lower(l), partition.upper(l));
    }
    const Conditioner& c = cond[static_cast<size_t>(k)];
    const Interval mean = c.conditional_mean(box);
    for (Index l = 0; l < cells; ++l) {
      const Interval mass = gaussian_integral_extrema(mean, c.variance, partition.lower(l), partition.upper(l));
      if (p_hi * mass.hi <= 0.0) continue;
      choice[static_cast<size_t>(k)] = l;
      self(self, k - 1, p_lo * mass.lo, p_hi * mass.hi);
    }
  };
  recurse(recurse, m - 1, 1.0, 1.0);

  std::vector<Interval> out;
  for (Index i = 0; i < m; ++i)
    out.emplace_back(std::clamp(lower[static_cast<size_t>(i)], 0.0, 1.0), std::clamp(upper[static_cast<size_t>(i)], 0.0, 1.0));
  return out;
}

std::vector<Interval> class_probability_bounds(const GpModel& model, const MomentBounds& moments,
                                               const LatentPartition& partition) {
  switch (model.task()) {
    case Task::BinaryClassification: {
      const Interval p = binary_range_bounds(model.link(), {moments.mean_lower(0), moments.mean_upper(0)},
                                             {moments.cov_lower(0, 0), moments.cov_upper(0, 0)});
      return {p, Interval(1.0 - p.hi, 1.0 - p.lo)};
    }
    case Task::MultiClass:
      return multiclass_range_bounds(moments, partition);
    case Task::Regression:
      break;
  }
  throw std::logic_error("class probabilities requested from a regression model");
}

}  // namespace gpcert
