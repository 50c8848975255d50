// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/rng.hpp"

#include "geowalk/error.hpp"

namespace geowalk {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw InvalidInput("Rng::index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

Points Rng::normal_points(std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Points out(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (int c = 0; c < 3; ++c) out(i, c) = dist(engine_);
  }
  return out;
}

}  // namespace geowalk
