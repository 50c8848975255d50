// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/point_cloud.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "geowalk/error.hpp"

namespace geowalk {

PointCloud::PointCloud(Points points, std::optional<int> label, std::string name)
    : points_(std::move(points)), label_(label), name_(std::move(name)) {
  require_finite(points_, "PointCloud");
}

void require_finite(const Points& points, std::string_view what) {
  if (!points.allFinite()) {
    std::ostringstream msg;
    msg << what << ": non-finite coordinate in " << points.rows() << "-point cloud";
    throw InvalidInput(msg.str());
  }
}

void require_min_points(const Points& points, std::size_t min_points, std::string_view what) {
  if (static_cast<std::size_t>(points.rows()) < min_points) {
    std::ostringstream msg;
    msg << what << ": need at least " << min_points << " points, got " << points.rows();
    throw InvalidInput(msg.str());
  }
}

Points normalize_unit_ball(const Points& points) {
  require_finite(points, "normalize_unit_ball");
  require_min_points(points, kMinCloudPoints, "normalize_unit_ball");

  const Eigen::RowVector3d centroid = points.colwise().mean();
  Points centered = points.rowwise() - centroid;
  const double radius = centered.rowwise().norm().maxCoeff();
  // Coincident points leave only rounding residue after centering.
  const double scale = points.cwiseAbs().maxCoeff();
  if (radius <= 1e-12 * std::max(1.0, scale)) {
    return centered;
  }
  centered /= radius;
  return centered;
}

PointCloud normalize_unit_ball(const PointCloud& cloud) {
  return PointCloud(normalize_unit_ball(cloud.points()), cloud.label(), cloud.name());
}

std::uint64_t fingerprint(const Points& points) {
  constexpr std::uint64_t kOffset = 14695981039346656037ULL;
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  std::uint64_t hash = kOffset;
  auto feed = [&hash](std::uint64_t word) {
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (word >> (8 * byte)) & 0xffU;
      hash *= kPrime;
    }
  };
  feed(static_cast<std::uint64_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      // +0.0 and -0.0 hash alike.
      const double v = points(i, c) == 0.0 ? 0.0 : points(i, c);
      feed(std::bit_cast<std::uint64_t>(v));
    }
  }
  return hash;
}

}  // namespace geowalk
