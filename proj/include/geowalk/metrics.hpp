// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "geowalk/point_cloud.hpp"

namespace geowalk {

/// Default penalty weights of the combined distance.
inline constexpr double kDefaultGamma1 = 2.0;
inline constexpr double kDefaultGamma2 = 0.5;

/// Perturbation size of `adv` relative to `source`.
///
/// Chamfer and Hausdorff are one-sided (adversarial points to their nearest
/// source point) and squared. d_norm pairs points by index.
struct DistanceReport {
  double d_hausdorff = 0.0;
  double d_chamfer = 0.0;
  double d_norm = 0.0;
  /// d_chamfer + gamma1 * d_hausdorff + gamma2 * d_norm
  double d_combined = 0.0;
  /// Largest non-squared distance from an adversarial point to its nearest source point.
  double max_pointwise = 0.0;

  bool operator==(const DistanceReport&) const = default;
};

/// sqrt(sum_i ||adv_i - source_i||^2). Requires equal point counts.
double d_norm(const Points& source, const Points& adv);
/// (1/n) * sum over adv of the squared distance to the nearest source point.
double d_chamfer(const Points& source, const Points& adv);
/// max over adv of the squared distance to the nearest source point.
double d_hausdorff(const Points& source, const Points& adv);

DistanceReport combined_distance(const Points& source, const Points& adv,
                                 double gamma1 = kDefaultGamma1, double gamma2 = kDefaultGamma2);

/// Two-sided mean squared nearest-neighbor distance between clouds of any
/// sizes. Cloud-level metric for nearest-cloud searches; not used to report
/// perturbation size.
double symmetric_chamfer(const Points& a, const Points& b);

}  // namespace geowalk
