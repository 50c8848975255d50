// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace geowalk {

/// n x 3 coordinate matrix, one point per row. Row order is significant:
/// every pipeline stage preserves it.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Smallest cloud accepted by geometric preprocessing.
inline constexpr std::size_t kMinCloudPoints = 4;

/// Ordered point set with an optional class label and provenance name.
///
/// Construction rejects non-finite coordinates. The minimum size is checked
/// by the operations that need it, since metrics are also defined on
/// single-point clouds.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(Points points, std::optional<int> label = std::nullopt,
                      std::string name = {});

  const Points& points() const { return points_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  bool empty() const { return points_.rows() == 0; }

  std::optional<int> label() const { return label_; }
  void set_label(std::optional<int> label) { label_ = label; }

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

 private:
  Points points_;
  std::optional<int> label_;
  std::string name_;
};

/// Throws InvalidInput if any coordinate is NaN or infinite.
void require_finite(const Points& points, std::string_view what);
/// Throws InvalidInput if the cloud has fewer than `min_points` rows.
void require_min_points(const Points& points, std::size_t min_points, std::string_view what);

/// Centers the cloud at its centroid and scales it so the farthest point has
/// norm 1. A cloud whose points all coincide is only centered.
Points normalize_unit_ball(const Points& points);
PointCloud normalize_unit_ball(const PointCloud& cloud);

/// Frobenius inner product of two equally shaped clouds.
inline double frobenius_dot(const Points& a, const Points& b) { return a.cwiseProduct(b).sum(); }

/// FNV-1a hash over the row count and raw coordinate bytes.
std::uint64_t fingerprint(const Points& points);

}  // namespace geowalk
