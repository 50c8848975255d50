// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "geowalk/discriminator.hpp"
#include "geowalk/fusion.hpp"

namespace geowalk {

/// -(1/|fused|) * sum over fused clouds I of score(N_I), where N_I is the
/// nearest cloud to I (symmetric Chamfer) among benign and fused, I excluded.
/// Benign clouds win exact distance ties.
double one_nna_loss(std::span<const Points> fused, std::span<const Points> benign,
                    const CloudScorer& scorer);

/// Leave-one-out 1-nearest-neighbor two-sample accuracy: the fraction of clouds
/// whose nearest other cloud comes from the same set. Near 0.5 when the two sets
/// are drawn from one distribution.
double one_nna_accuracy(std::span<const Points> first, std::span<const Points> second);

struct WeightLearningConfig {
  int epochs = 50;
  double learning_rate = 0.001;
  /// Central-difference step on each weight.
  double fd_step = 1e-3;
  /// Source/target pairs drawn per class; one epoch passes over all of them.
  std::size_t pairs = 8;
  /// Pairs per Adam step.
  std::size_t batch_pairs = 1;
  /// 0 selects floor(n / 10).
  std::size_t band_cutoff = 0;
  std::size_t k = kDefaultGraphK;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

/// The weight-learning objective over a fixed set of fusion pairs:
/// classification loss (fused clouds toward the benign label) + 1-NNA
/// distance loss + low-band regularizer, each with weight 1.
class FusionObjective {
 public:
  struct Terms {
    double classification = 0.0;
    double distance = 0.0;
    double regularizer = 0.0;
    double total() const { return classification + distance + regularizer; }
  };

  FusionObjective(std::vector<FusionPair> pairs, std::vector<Points> benign, const CloudScorer& scorer);

  /// Over every pair.
  Terms evaluate(double alpha_low, double alpha_high) const;
  /// Over the pairs listed in `batch`.
  Terms evaluate(double alpha_low, double alpha_high, std::span<const std::size_t> batch) const;
  double loss(double alpha_low, double alpha_high) const { return evaluate(alpha_low, alpha_high).total(); }

  const std::vector<FusionPair>& pairs() const { return pairs_; }

 private:
  std::vector<FusionPair> pairs_;
  std::vector<Points> benign_;
  const CloudScorer* scorer_;
};

struct WeightLearningLog {
  std::vector<double> epoch_loss;
  std::vector<FusionWeights> trajectory;
  /// Set when every finite-difference gradient was exactly zero.
  bool flat_objective = false;
};

/// Adam over (alpha_low, alpha_high) from (0.5, 0.5). Each epoch shuffles the
/// pairs and takes one step per batch of `batch_pairs`; gradients by central
/// finite differences, weights clamped to [0, 1] after every step.
FusionWeights learn_fusion_weights(int class_id, const FusionObjective& objective,
                                   const WeightLearningConfig& config, WeightLearningLog* log = nullptr);

/// Draws `config.pairs` source/target pairs with the config seed, builds the
/// objective over `sources` as the benign set, and learns the weights.
FusionWeights learn_fusion_weights(int class_id, std::span<const Points> sources,
                                   std::span<const Points> targets, const CloudScorer& scorer,
                                   const WeightLearningConfig& config, WeightLearningLog* log = nullptr);

struct BankProvenance {
  int epochs = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t band_cutoff = 0;
  bool shared_discriminator = false;

  bool operator==(const BankProvenance&) const = default;
};

/// Learned fusion weights grouped by the class they were learned for.
class WeightBank {
 public:
  /// Appends clamped weights under weights.class_id.
  void add(const FusionWeights& weights);
  bool contains(int class_id) const { return entries_.count(class_id) != 0; }
  /// Throws InvalidInput listing the available classes when `class_id` is missing.
  const std::vector<FusionWeights>& entries(int class_id) const;
  std::vector<int> classes() const;
  std::size_t size() const;

  BankProvenance provenance;

  std::string to_json() const;
  static WeightBank from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static WeightBank load(const std::filesystem::path& path);

  bool operator==(const WeightBank&) const = default;

 private:
  std::map<int, std::vector<FusionWeights>> entries_;
};

/// Uniform pick among the class's entries.
FusionWeights sample_weights(const WeightBank& bank, int class_id, Rng& rng);

}  // namespace geowalk
