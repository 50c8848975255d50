// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "geowalk/point_cloud.hpp"

namespace geowalk {

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// The single source of randomness threaded through a run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::mt19937_64& engine() { return engine_; }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);
  double uniform(double lo = 0.0, double hi = 1.0);
  double normal();
  /// n x 3 matrix of i.i.d. standard normal entries.
  Points normal_points(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace geowalk
