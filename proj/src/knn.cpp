// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/knn.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "geowalk/error.hpp"

namespace geowalk {

NeighborLists knn_indices(const Points& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k >= n) {
    std::ostringstream msg;
    msg << "knn_indices: need 0 < k < n, got k=" << k << " n=" << n;
    throw InvalidInput(msg.str());
  }

  NeighborLists neighbors(n);
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    const auto row_i = points.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (points.row(static_cast<Eigen::Index>(j)) - row_i).squaredNorm();
      candidates.emplace_back(d, j);
    }
    // pair ordering breaks distance ties by index
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end());
    auto& list = neighbors[i];
    list.reserve(k);
    for (std::size_t r = 0; r < k; ++r) list.push_back(candidates[r].second);
  }
  return neighbors;
}

}  // namespace geowalk
