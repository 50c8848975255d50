// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geowalk/point_cloud.hpp"
#include "geowalk/rng.hpp"

namespace geowalk {

enum class ShapeKind { sphere, axis_box, cylinder, torus, cone, plane_patch };
std::string_view shape_name(ShapeKind kind);
ShapeKind parse_shape(std::string_view name);
std::vector<ShapeKind> all_shapes();

/// n points on one random instance of the shape (size parameters drawn from
/// `rng`), plus isotropic Gaussian jitter and an optional uniform random
/// rotation, then normalized to the unit ball.
Points generate_shape(ShapeKind kind, std::size_t n, double jitter, bool random_rotation, Rng& rng);

/// Uniform random rotation matrix (Haar measure).
Eigen::Matrix3d random_rotation(Rng& rng);

struct SyntheticDatasetSpec {
  std::vector<ShapeKind> classes = all_shapes();
  std::size_t n_points = 256;
  std::size_t instances_per_class = 25;
  double jitter = 0.01;
  bool random_rotation = false;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;

  void validate() const;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<PointCloud> train;
  std::vector<PointCloud> test;
  bool random_rotation = false;

  /// Training clouds whose label differs from `label`.
  std::vector<Points> train_excluding(int label) const;
  /// Training clouds with the given label.
  std::vector<Points> train_of(int label) const;
};

/// Class i of the spec gets label i. Each class is split in order: the first
/// round(train_fraction * instances) instances train, the rest test.
Dataset generate_dataset(const SyntheticDatasetSpec& spec);

/// Directory layout: manifest.json plus one .xyz file per cloud under train/ and test/.
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);
Dataset load_dataset(const std::filesystem::path& directory);

/// Reads an OFF triangle/polygon mesh and samples `n` points uniformly by area.
Points sample_off_mesh(const std::filesystem::path& path, std::size_t n, Rng& rng);

}  // namespace geowalk
