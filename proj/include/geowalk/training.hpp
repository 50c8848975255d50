// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "geowalk/dataset.hpp"
#include "geowalk/discriminator.hpp"
#include "geowalk/weight_learning.hpp"

namespace geowalk {

/// `count` fusions of random source/target pairs under weights drawn uniformly
/// from [0, 1]^2; the negatives a discriminator learns to reject.
std::vector<Points> random_fusion_negatives(std::span<const Points> sources, std::span<const Points> targets,
                                            std::size_t count, std::size_t band_cutoff, std::size_t k, Rng& rng);

struct BankTrainingConfig {
  DiscriminatorTrainingConfig discriminator;
  WeightLearningConfig weights;
  std::size_t negatives_per_class = 20;
  /// Learned entries per class, each from its own pair draw.
  std::size_t entries_per_class = 1;
  bool shared_discriminator = false;
  std::uint64_t seed = 0;
};

struct ClassDiscriminator {
  Discriminator model;
  double train_accuracy = 0.0;
  /// On test clouds of the class against fresh fusion negatives.
  double heldout_accuracy = 0.0;
};

/// Discriminator for one class (or, with class_id < 0, for all classes):
/// benign training clouds against random-weight fusions of them with other
/// classes.
ClassDiscriminator train_class_discriminator(const Dataset& dataset, int class_id, const BankTrainingConfig& config,
                                             DiscriminatorTrainingLog* log = nullptr);

/// Learns `entries_per_class` fusion weights for every class in `classes`
/// (all classes when empty), training the discriminators on the way.
WeightBank build_weight_bank(const Dataset& dataset, const BankTrainingConfig& config,
                             std::span<const int> classes = {},
                             std::map<int, ClassDiscriminator>* discriminators = nullptr);

}  // namespace geowalk
