// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations shared by the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "geowalk/point_cloud.hpp"
#include "geowalk/rng.hpp"

namespace geowalk::testing {

inline Points random_cloud(std::size_t n, Rng& rng, double scale = 1.0) {
  Points p(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (int d = 0; d < 3; ++d) p(i, d) = rng.uniform(-scale, scale);
  }
  return p;
}

inline double sq_dist(const Points& a, Eigen::Index i, const Points& b, Eigen::Index j) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (a(i, d) - b(j, d)) * (a(i, d) - b(j, d));
  return s;
}

// Squared distance from adv point i to its nearest source point, by full scan.
inline double nearest_sq(const Points& source, const Points& adv, Eigen::Index i) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < source.rows(); ++j) best = std::min(best, sq_dist(adv, i, source, j));
  return best;
}

inline double brute_chamfer(const Points& source, const Points& adv) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < adv.rows(); ++i) s += nearest_sq(source, adv, i);
  return s / static_cast<double>(adv.rows());
}

inline double brute_hausdorff(const Points& source, const Points& adv) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < adv.rows(); ++i) m = std::max(m, nearest_sq(source, adv, i));
  return m;
}

inline double brute_norm(const Points& source, const Points& adv) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < adv.rows(); ++i) s += sq_dist(adv, i, source, i);
  return std::sqrt(s);
}

inline double brute_symmetric_chamfer(const Points& a, const Points& b) {
  return brute_chamfer(a, b) + brute_chamfer(b, a);
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }
  std::size_t components() {
    std::size_t c = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) c += find(i) == i;
    return c;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace geowalk::testing
