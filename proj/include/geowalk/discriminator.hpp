// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "geowalk/point_cloud.hpp"
#include "geowalk/rng.hpp"

namespace geowalk {

/// Anything that maps a cloud to a real-valued "benign" logit.
class CloudScorer {
 public:
  virtual ~CloudScorer() = default;
  virtual double logit(const Points& points) const = 0;
  /// sigmoid(logit)
  double score(const Points& points) const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Point-cloud discriminator: a shared per-point map 3 -> 64 -> 128 (ReLU),
/// global max-pool, then a 128 -> 64 -> 32 -> 1 head producing one logit.
/// Max-pooling makes the output invariant to point order.
class Discriminator final : public CloudScorer {
 public:
  static constexpr std::size_t kLayers = 5;
  using Layers = std::array<DenseLayer, kLayers>;

  /// He-normal weights, zero biases.
  static Discriminator random_init(Rng& rng);
  /// All-zero parameter set with the discriminator's shapes, used for gradients and moments.
  static Layers zeros_like();

  double logit(const Points& points) const override;

  /// Binary cross-entropy with logits for one cloud (label 1 = benign); adds the
  /// parameter gradient into `grads` and returns the loss.
  double accumulate_gradient(const Points& points, double label, Layers& grads) const;

  const Layers& layers() const { return layers_; }
  Layers& layers() { return layers_; }
  bool all_finite() const;

  // Flat tensor file, little-endian: uint64 tensor count, then per tensor
  // uint64 rank, uint64 dims[rank], float64 data in row-major order.
  void write(std::ostream& out) const;
  static Discriminator read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Discriminator load(const std::filesystem::path& path);

 private:
  Layers layers_;
};

struct DiscriminatorTrainingConfig {
  int epochs = 100;
  double learning_rate = 0.002;
  std::size_t batch_size = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct DiscriminatorTrainingLog {
  std::vector<double> epoch_loss;
};

/// Adam on binary cross-entropy: positives (benign clouds) labelled 1,
/// negatives (random-weight fusions) labelled 0.
Discriminator train_discriminator(std::span<const Points> positives, std::span<const Points> negatives,
                                  const DiscriminatorTrainingConfig& config,
                                  DiscriminatorTrainingLog* log = nullptr);
/// Same, continuing from a given parameter set.
Discriminator train_discriminator(Discriminator initial, std::span<const Points> positives,
                                  std::span<const Points> negatives,
                                  const DiscriminatorTrainingConfig& config,
                                  DiscriminatorTrainingLog* log = nullptr);

/// Fraction of clouds on the right side of logit 0.
double discriminator_accuracy(const CloudScorer& scorer, std::span<const Points> positives,
                              std::span<const Points> negatives);

}  // namespace geowalk
