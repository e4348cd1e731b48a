// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>

#include "gpcert/io.hpp"

namespace gpcert {

/// Two unit-variance Gaussian blobs in the plane: label 1 centred at
/// (shift, 0), label 2 at (0, shift). Each split is balanced exactly (the
/// extra point of an odd size goes to label 1) and shuffled.
struct SyntheticSplit {
  Dataset train;
  Dataset test;
};

SyntheticSplit make_synthetic2d(Index n_train, Index n_test, std::uint64_t seed, double shift = 3.0);

/// Maps labels {1, 2} to {+1, -1}.
Vector to_signed_labels(const Vector& labels);

}  // namespace gpcert
