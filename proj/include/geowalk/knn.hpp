// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "geowalk/point_cloud.hpp"

namespace geowalk {

/// neighbors[i] lists the k nearest points of point i, nearest first.
using NeighborLists = std::vector<std::vector<std::size_t>>;

/// Exact k-nearest neighbors by full pairwise distances. Self is excluded and
/// equal distances go to the lower index. Throws InvalidInput if k >= n.
NeighborLists knn_indices(const Points& points, std::size_t k);

}  // namespace geowalk
