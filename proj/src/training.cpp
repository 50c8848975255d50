// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/training.hpp"

#include "geowalk/error.hpp"
#include "geowalk/fusion.hpp"

namespace geowalk {
namespace {

std::vector<Points> clouds_of(std::span<const PointCloud> clouds, int class_id, bool match) {
  std::vector<Points> out;
  for (const auto& cloud : clouds) {
    const bool same = class_id < 0 || cloud.label() == class_id;
    if (same == match) out.push_back(cloud.points());
  }
  return out;
}

std::vector<Points> other_classes(std::span<const PointCloud> clouds, int class_id) {
  if (class_id < 0) return clouds_of(clouds, -1, true);
  return clouds_of(clouds, class_id, false);
}

}  // namespace

std::vector<Points> random_fusion_negatives(std::span<const Points> sources, std::span<const Points> targets,
                                            std::size_t count, std::size_t band_cutoff, std::size_t k, Rng& rng) {
  if (sources.empty() || targets.empty()) throw InvalidInput("random_fusion_negatives: empty source or target set");
  std::vector<Points> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Points& source = sources[rng.index(sources.size())];
    const auto n = static_cast<std::size_t>(source.rows());
    const Points target = resample_to(targets[rng.index(targets.size())], n, rng);
    const BandSplit split = band_cutoff == 0 ? BandSplit::default_for(n) : BandSplit(band_cutoff);
    FusionWeights weights;
    weights.alpha_low = rng.uniform();
    weights.alpha_high = rng.uniform();
    out.push_back(FusionPair(source, target, split, GraphOptions{k, false}).fuse(weights));
  }
  return out;
}

ClassDiscriminator train_class_discriminator(const Dataset& dataset, int class_id, const BankTrainingConfig& config,
                                             DiscriminatorTrainingLog* log) {
  const auto stream = static_cast<std::uint64_t>(class_id + 1);
  Rng rng(mix_seed(config.seed, 500 + stream));
  const auto positives = clouds_of(dataset.train, class_id, true);
  const auto targets = other_classes(dataset.train, class_id);
  if (positives.empty()) throw InvalidInput("train_class_discriminator: no training clouds for the class");
  const std::size_t k = config.weights.k;
  const std::size_t cutoff = config.weights.band_cutoff;
  const auto negatives = random_fusion_negatives(positives, targets, config.negatives_per_class, cutoff, k, rng);

  DiscriminatorTrainingConfig disc_config = config.discriminator;
  disc_config.seed = mix_seed(config.seed, 600 + stream);
  ClassDiscriminator out{train_discriminator(positives, negatives, disc_config, log), 0.0, 0.0};
  out.train_accuracy = discriminator_accuracy(out.model, positives, negatives);

  const auto test_positives = clouds_of(dataset.test, class_id, true);
  const auto test_targets = other_classes(dataset.test, class_id);
  if (!test_positives.empty() && !test_targets.empty()) {
    const auto test_negatives =
        random_fusion_negatives(test_positives, test_targets, test_positives.size(), cutoff, k, rng);
    out.heldout_accuracy = discriminator_accuracy(out.model, test_positives, test_negatives);
  }
  return out;
}

WeightBank build_weight_bank(const Dataset& dataset, const BankTrainingConfig& config, std::span<const int> classes,
                             std::map<int, ClassDiscriminator>* discriminators) {
  std::vector<int> wanted(classes.begin(), classes.end());
  if (wanted.empty()) {
    for (std::size_t c = 0; c < dataset.class_names.size(); ++c) wanted.push_back(static_cast<int>(c));
  }
  WeightBank bank;
  bank.provenance = BankProvenance{config.weights.epochs, config.weights.learning_rate, config.seed,
                                   config.weights.band_cutoff, config.shared_discriminator};
  std::map<int, ClassDiscriminator> trained;
  if (config.shared_discriminator) trained.emplace(-1, train_class_discriminator(dataset, -1, config));

  for (const int class_id : wanted) {
    if (!config.shared_discriminator) trained.emplace(class_id, train_class_discriminator(dataset, class_id, config));
    const Discriminator& disc = trained.at(config.shared_discriminator ? -1 : class_id).model;
    const auto sources = dataset.train_of(class_id);
    const auto targets = dataset.train_excluding(class_id);
    for (std::size_t e = 0; e < config.entries_per_class; ++e) {
      WeightLearningConfig weights = config.weights;
      weights.seed = mix_seed(config.seed, 700 + e);
      bank.add(learn_fusion_weights(class_id, sources, targets, disc, weights));
    }
  }
  if (discriminators != nullptr) *discriminators = std::move(trained);
  return bank;
}

}  // namespace geowalk
