// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geowalk/oracle.hpp"
#include "geowalk/point_cloud.hpp"

namespace geowalk {

inline constexpr int kFeatureDim = 13;
using CloudFeatures = Eigen::Matrix<double, kFeatureDim, 1>;

struct FeatureOptions {
  /// Axis-aligned bounding-box ratios depend on orientation; they are zeroed
  /// when the data carries random rotations.
  bool include_bbox = true;

  bool operator==(const FeatureOptions&) const = default;
};

/// 13 permutation-invariant shape features of the unit-ball-normalized cloud:
///   [0..2]  covariance eigenvalues, descending
///   [3..10] fraction of points per radial bin of width 1/8 on [0, 1]
///   [11,12] bounding-box extents e2/e1, e3/e1 with e1 >= e2 >= e3
CloudFeatures extract_features(const Points& points, const FeatureOptions& options = {});

/// Nearest-centroid classifier in feature space. Deliberately weak: linear
/// decision regions, no learned scaling. Ties go to the lower class id.
class NativeCentroidClassifier final : public HardLabelOracle {
 public:
  NativeCentroidClassifier(std::vector<std::pair<int, CloudFeatures>> centroids, FeatureOptions options);

  int predict(const Points& points) const override;
  std::size_t num_classes() const { return centroids_.size(); }
  const std::vector<std::pair<int, CloudFeatures>>& centroids() const { return centroids_; }
  const FeatureOptions& options() const { return options_; }

  /// Fraction of labelled clouds predicted correctly.
  double accuracy(std::span<const PointCloud> labelled) const;

  std::string to_json() const;
  static NativeCentroidClassifier from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static NativeCentroidClassifier load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<int, CloudFeatures>> centroids_;  // sorted by class id
  FeatureOptions options_;
};

/// Per-class feature means. Requires labelled clouds from at least two
/// classes. `training_accuracy`, when given, receives the resubstitution accuracy.
NativeCentroidClassifier train_native_classifier(std::span<const PointCloud> dataset,
                                                 const FeatureOptions& options = {},
                                                 double* training_accuracy = nullptr);

}  // namespace geowalk
