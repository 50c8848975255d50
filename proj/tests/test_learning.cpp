// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "geowalk/discriminator.hpp"
#include "geowalk/error.hpp"
#include "geowalk/metrics.hpp"
#include "geowalk/training.hpp"
#include "geowalk/weight_learning.hpp"
#include "support.hpp"

using namespace geowalk;
using geowalk::testing::random_cloud;

namespace {

std::vector<Points> blobs(std::size_t count, std::size_t n, double offset, Rng& rng) {
  std::vector<Points> out;
  for (std::size_t i = 0; i < count; ++i) {
    Points p = random_cloud(n, rng, 0.5);
    p.col(0).array() += offset;
    out.push_back(p);
  }
  return out;
}

// Scores a cloud by its closeness to one reference cloud.
class ClosenessScorer final : public CloudScorer {
 public:
  explicit ClosenessScorer(Points reference) : reference_(std::move(reference)) {}
  double logit(const Points& points) const override { return 2.0 - 20.0 * symmetric_chamfer(points, reference_); }

 private:
  Points reference_;
};

class ConstantScorer final : public CloudScorer {
 public:
  double logit(const Points&) const override { return 0.3; }
};

// Independent 1-NNA loss: nearest cloud by brute-force symmetric Chamfer.
double brute_one_nna(const std::vector<Points>& fused, const std::vector<Points>& benign, const CloudScorer& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    const Points* pick = nullptr;
    for (const auto& b : benign) {
      const double d = testing::brute_symmetric_chamfer(fused[i], b);
      if (d < best) {
        best = d;
        pick = &b;
      }
    }
    for (std::size_t j = 0; j < fused.size(); ++j) {
      if (j == i) continue;
      const double d = testing::brute_symmetric_chamfer(fused[i], fused[j]);
      if (d < best) {
        best = d;
        pick = &fused[j];
      }
    }
    total += s.score(*pick);
  }
  return -total / static_cast<double>(fused.size());
}

}  // namespace

TEST_CASE("discriminator is permutation invariant and serializable") {
  Rng rng(1);
  const Discriminator d = Discriminator::random_init(rng);
  Points p = random_cloud(30, rng);
  const double before = d.logit(p);
  CHECK(std::isfinite(before));
  p.row(0).swap(p.row(7));
  CHECK(d.logit(p) == before);
  CHECK(d.score(p) == doctest::Approx(1.0 / (1.0 + std::exp(-before))));

  std::stringstream buf;
  d.write(buf);
  const Discriminator r = Discriminator::read(buf);
  CHECK(r.logit(p) == before);
  std::stringstream truncated(buf.str().substr(0, 40));
  CHECK_THROWS_AS(Discriminator::read(truncated), InvalidInput);
}

TEST_CASE("discriminator separates offset blobs") {
  Rng rng(2);
  const auto pos = blobs(16, 24, 0.0, rng);
  const auto neg = blobs(16, 24, 10.0, rng);
  DiscriminatorTrainingConfig config;
  config.epochs = 20;
  config.seed = 5;
  DiscriminatorTrainingLog log;
  const Discriminator d = train_discriminator(pos, neg, config, &log);
  CHECK(log.epoch_loss.size() == 20);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
  const auto test_pos = blobs(10, 24, 0.0, rng);
  const auto test_neg = blobs(10, 24, 10.0, rng);
  CHECK(discriminator_accuracy(d, test_pos, test_neg) > 0.95);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Rng rng(3);
  const Discriminator init = Discriminator::random_init(rng);
  const auto pos = blobs(4, 16, 0.0, rng);
  const auto neg = blobs(4, 16, 1.0, rng);
  DiscriminatorTrainingConfig config;
  config.epochs = 1;
  config.learning_rate = 0.0;
  const Discriminator out = train_discriminator(init, pos, neg, config);
  for (std::size_t l = 0; l < Discriminator::kLayers; ++l) {
    CHECK(out.layers()[l].weight == init.layers()[l].weight);
    CHECK(out.layers()[l].bias == init.layers()[l].bias);
  }
  CHECK_THROWS_AS(train_discriminator(pos, {}, config), InvalidInput);
}

TEST_CASE("1-NNA loss examples") {
  Rng rng(4);
  const ConstantScorer constant;
  const auto benign = blobs(3, 12, 0.0, rng);
  // identical sets: every fused cloud finds its benign twin first
  const ClosenessScorer scorer(benign[0]);
  double expected = 0.0;
  for (const auto& b : benign) expected += scorer.score(b);
  CHECK(one_nna_loss(benign, benign, scorer) == doctest::Approx(-expected / 3.0));
  const std::vector<Points> one{benign[1]};
  const std::vector<Points> other{benign[2]};
  CHECK(one_nna_loss(one, other, scorer) == doctest::Approx(-scorer.score(benign[2])));
  CHECK_THROWS_AS(one_nna_loss(one, std::vector<Points>{}, constant), InvalidInput);
}

TEST_CASE("1-NNA loss matches brute force") {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto fused = blobs(8, 10, 0.3, rng);
    const auto benign = blobs(8, 10, 0.0, rng);
    const ClosenessScorer scorer(benign[0]);
    CHECK(std::abs(one_nna_loss(fused, benign, scorer) - brute_one_nna(fused, benign, scorer)) < 1e-12);
  }
}

TEST_CASE("1-NNA accuracy") {
  Rng rng(6);
  const auto near = blobs(10, 16, 0.0, rng);
  const auto far = blobs(10, 16, 5.0, rng);
  CHECK(one_nna_accuracy(near, far) == 1.0);
  const auto same = blobs(10, 16, 0.0, rng);
  CHECK(one_nna_accuracy(near, same) < 0.9);
}

TEST_CASE("weight learning") {
  Rng rng(7);
  const Points source = random_cloud(40, rng, 0.6);
  const std::vector<Points> sources{source};
  const auto targets = blobs(4, 40, 0.0, rng);
  const ClosenessScorer scorer(source);

  SUBCASE("zero epochs keep the initialization") {
    WeightLearningConfig config;
    config.epochs = 0;
    config.pairs = 2;
    const FusionWeights w = learn_fusion_weights(3, sources, targets, scorer, config);
    CHECK(w.alpha_low == 0.5);
    CHECK(w.alpha_high == 0.5);
    CHECK(w.class_id == 3);
  }
  SUBCASE("a closeness discriminator pulls the weights toward the source") {
    WeightLearningConfig config;
    config.epochs = 20;
    config.pairs = 4;
    config.learning_rate = 0.01;
    WeightLearningLog log;
    const FusionWeights w = learn_fusion_weights(1, sources, targets, scorer, config, &log);
    CHECK(w.alpha_low >= 0.5);
    CHECK(w.alpha_high >= 0.5);
    CHECK(log.epoch_loss.size() == 20);
    for (const auto& step : log.trajectory) {
      CHECK(step.alpha_low >= 0.0);
      CHECK(step.alpha_low <= 1.0);
      CHECK(step.alpha_high >= 0.0);
      CHECK(step.alpha_high <= 1.0);
    }
  }
  SUBCASE("large steps stay clamped") {
    WeightLearningConfig config;
    config.epochs = 5;
    config.pairs = 2;
    config.learning_rate = 5.0;
    const FusionWeights w = learn_fusion_weights(1, sources, targets, scorer, config);
    CHECK(w.alpha_low >= 0.0);
    CHECK(w.alpha_low <= 1.0);
    CHECK(w.alpha_high >= 0.0);
    CHECK(w.alpha_high <= 1.0);
  }
  SUBCASE("objective terms") {
    std::vector<FusionPair> pairs;
    pairs.emplace_back(source, targets[0], BandSplit::default_for(40));
    const FusionObjective objective(std::move(pairs), sources, scorer);
    const auto at_source = objective.evaluate(1.0, 1.0);
    CHECK(at_source.regularizer == 0.0);
    CHECK(objective.evaluate(0.2, 1.0).regularizer > 0.0);
    CHECK(objective.loss(0.5, 0.5) == doctest::Approx(objective.evaluate(0.5, 0.5).total()));
  }
}

TEST_CASE("weight bank") {
  WeightBank bank;
  bank.provenance = BankProvenance{50, 0.001, 9, 0, false};
  bank.add(FusionWeights{0.9, 0.7, 0});
  bank.add(FusionWeights{1.5, -1.0, 2});
  CHECK(bank.size() == 2);
  CHECK(bank.classes() == std::vector<int>{0, 2});
  CHECK(bank.entries(2).front().alpha_low == 1.0);
  CHECK(bank.entries(2).front().alpha_high == 0.0);
  CHECK(WeightBank::from_json(bank.to_json()) == bank);
  try {
    (void)bank.entries(5);
    FAIL("missing class accepted");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("available classes: 0 2") != std::string::npos);
  }
  CHECK_THROWS_AS(WeightBank::from_json("{\"entries\": 3}"), InvalidInput);

  const auto path = std::filesystem::temp_directory_path() / "geowalk_bank_test.json";
  bank.save(path);
  CHECK(WeightBank::load(path) == bank);
  std::filesystem::remove(path);
}

TEST_CASE("sample_weights") {
  WeightBank bank;
  bank.add(FusionWeights{0.6, 0.6, 1});
  Rng rng(8);
  CHECK(sample_weights(bank, 1, rng) == FusionWeights{0.6, 0.6, 1});
  for (int i = 0; i < 3; ++i) bank.add(FusionWeights{0.7 + 0.1 * i, 0.5, 1});
  std::array<int, 4> hits{};
  Rng draw(9);
  for (int i = 0; i < 1000; ++i) {
    const FusionWeights w = sample_weights(bank, 1, draw);
    for (std::size_t e = 0; e < 4; ++e) hits[e] += bank.entries(1)[e] == w;
  }
  for (int h : hits) CHECK(std::abs(h / 1000.0 - 0.25) <= 0.05);
  Rng a(10);
  Rng b(10);
  CHECK(sample_weights(bank, 1, a) == sample_weights(bank, 1, b));
  CHECK_THROWS_AS(sample_weights(bank, 4, a), InvalidInput);
}

TEST_CASE("random-weight negatives") {
  Rng rng(11);
  const auto sources = blobs(3, 30, 0.0, rng);
  const auto targets = blobs(3, 40, 2.0, rng);
  const auto negatives = random_fusion_negatives(sources, targets, 5, 0, 10, rng);
  CHECK(negatives.size() == 5);
  for (const auto& n : negatives) CHECK(n.rows() == 30);
  CHECK_THROWS_AS(random_fusion_negatives({}, targets, 1, 0, 10, rng), InvalidInput);
}
