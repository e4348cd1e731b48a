// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/region.hpp"

#include <stdexcept>

namespace gpcert {

Region::Region(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw std::invalid_argument("region corners differ in dimension");
  for (Index j = 0; j < lower_.size(); ++j) {
    if (!(lower_(j) <= upper_(j))) throw std::invalid_argument("region lower corner exceeds upper corner");
  }
}

Region Region::point(const Vector& x) { return Region(x, x); }

Region Region::box(const Vector& center, double radius) {
  if (radius < 0) throw std::invalid_argument("negative box radius");
  return Region(center.array() - radius, center.array() + radius);
}

double Region::diameter() const { return dim() == 0 ? 0.0 : width().maxCoeff(); }

bool Region::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
}

bool Region::contains(const Region& other) const {
  return other.dim() == dim() && (other.lower_.array() >= lower_.array()).all() &&
         (other.upper_.array() <= upper_.array()).all();
}

Vector Region::clamp(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

std::pair<Region, Region> Region::split(Index j) const {
  if (j < 0 || j >= dim()) throw std::out_of_range("split dimension out of range");
  if (!(upper_(j) > lower_(j))) throw std::invalid_argument("cannot split a zero-width dimension");
  const double m = 0.5 * (lower_(j) + upper_(j));
  Vector left_upper = upper_;
  Vector right_lower = lower_;
  left_upper(j) = m;
  right_lower(j) = m;
  return {Region(lower_, left_upper), Region(right_lower, upper_)};
}

}  // namespace gpcert
