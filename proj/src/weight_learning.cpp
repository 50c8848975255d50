// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/weight_learning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "geowalk/error.hpp"
#include "geowalk/metrics.hpp"

namespace geowalk {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double one_nna_loss(std::span<const Points> fused, std::span<const Points> benign,
                    const CloudScorer& scorer) {
  if (fused.empty()) throw InvalidInput("one_nna_loss: empty fused set");
  if (fused.size() + benign.size() < 2) throw InvalidInput("one_nna_loss: need at least two clouds");

  double total = 0.0;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const Points* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : benign) {
      const double d = symmetric_chamfer(fused[i], b);
      if (d < best) {
        best = d;
        nearest = &b;
      }
    }
    for (std::size_t j = 0; j < fused.size(); ++j) {
      if (j == i) continue;
      const double d = symmetric_chamfer(fused[i], fused[j]);
      if (d < best) {
        best = d;
        nearest = &fused[j];
      }
    }
    total += scorer.score(*nearest);
  }
  return -total / static_cast<double>(fused.size());
}

double one_nna_accuracy(std::span<const Points> first, std::span<const Points> second) {
  std::vector<const Points*> all;
  for (const auto& p : first) all.push_back(&p);
  for (const auto& p : second) all.push_back(&p);
  if (first.empty() || second.empty() || all.size() < 3) {
    throw InvalidInput("one_nna_accuracy: both sets must be non-empty");
  }
  const std::size_t split = first.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::size_t nearest = i;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (j == i) continue;
      const double d = symmetric_chamfer(*all[i], *all[j]);
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    correct += (i < split) == (nearest < split) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(all.size());
}

FusionObjective::FusionObjective(std::vector<FusionPair> pairs, std::vector<Points> benign,
                                 const CloudScorer& scorer)
    : pairs_(std::move(pairs)), benign_(std::move(benign)), scorer_(&scorer) {
  if (pairs_.empty()) throw InvalidInput("FusionObjective: no fusion pairs");
}

FusionObjective::Terms FusionObjective::evaluate(double alpha_low, double alpha_high) const {
  std::vector<std::size_t> all(pairs_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return evaluate(alpha_low, alpha_high, all);
}

FusionObjective::Terms FusionObjective::evaluate(double alpha_low, double alpha_high,
                                                 std::span<const std::size_t> batch) const {
  if (batch.empty()) throw InvalidInput("FusionObjective: empty batch");
  std::vector<Points> fused;
  fused.reserve(batch.size());
  Terms terms;
  for (const auto index : batch) {
    const FusionPair& pair = pairs_.at(index);
    fused.push_back(pair.fuse(alpha_low, alpha_high));
    terms.classification += softplus(-scorer_->logit(fused.back()));
    terms.regularizer += std::abs(1.0 - alpha_low) * pair.low_band_gap();
  }
  const auto count = static_cast<double>(batch.size());
  terms.classification /= count;
  terms.regularizer /= count;
  terms.distance = one_nna_loss(fused, benign_, *scorer_);
  return terms;
}

FusionWeights learn_fusion_weights(int class_id, const FusionObjective& objective,
                                   const WeightLearningConfig& config, WeightLearningLog* log) {
  if (config.epochs < 0 || !(config.learning_rate >= 0.0) || !(config.fd_step > 0.0) || config.batch_pairs == 0) {
    throw InvalidInput("learn_fusion_weights: invalid configuration");
  }
  std::array<double, 2> alpha{0.5, 0.5};
  std::array<double, 2> m{0.0, 0.0};
  std::array<double, 2> v{0.0, 0.0};
  bool any_signal = false;
  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(class_id) + 2000));
  std::vector<std::size_t> order(objective.pairs().size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto loss_at = [&](const std::array<double, 2>& a, std::span<const std::size_t> batch) {
    const double value = objective.evaluate(a[0], a[1], batch).total();
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "learn_fusion_weights: non-finite loss at alpha=(" << a[0] << ", " << a[1] << ")";
      throw NumericalError(msg.str());
    }
    return value;
  };

  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t first = 0; first < order.size(); first += config.batch_pairs) {
      const std::span<const std::size_t> batch(order.data() + first,
                                               std::min(config.batch_pairs, order.size() - first));
      std::array<double, 2> grad{};
      for (std::size_t d = 0; d < 2; ++d) {
        auto hi = alpha;
        auto lo = alpha;
        hi[d] = std::min(1.0, alpha[d] + config.fd_step);
        lo[d] = std::max(0.0, alpha[d] - config.fd_step);
        grad[d] = (loss_at(hi, batch) - loss_at(lo, batch)) / (hi[d] - lo[d]);
        any_signal = any_signal || grad[d] != 0.0;
      }
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, step);
      const double c2 = 1.0 - std::pow(config.beta2, step);
      for (std::size_t d = 0; d < 2; ++d) {
        m[d] = config.beta1 * m[d] + (1.0 - config.beta1) * grad[d];
        v[d] = config.beta2 * v[d] + (1.0 - config.beta2) * grad[d] * grad[d];
        alpha[d] -= config.learning_rate * (m[d] / c1) / (std::sqrt(v[d] / c2) + config.adam_epsilon);
        alpha[d] = std::clamp(alpha[d], 0.0, 1.0);
      }
    }
    if (log != nullptr) {
      log->epoch_loss.push_back(loss_at(alpha, order));
      log->trajectory.push_back(FusionWeights{alpha[0], alpha[1], class_id});
    }
  }

  if (config.epochs > 0 && !any_signal) {
    std::cerr << "warning: fusion objective for class " << class_id
              << " is flat; keeping the initial weights\n";
    if (log != nullptr) log->flat_objective = true;
    return FusionWeights{0.5, 0.5, class_id};
  }
  return FusionWeights{alpha[0], alpha[1], class_id};
}

FusionWeights learn_fusion_weights(int class_id, std::span<const Points> sources,
                                   std::span<const Points> targets, const CloudScorer& scorer,
                                   const WeightLearningConfig& config, WeightLearningLog* log) {
  if (sources.empty() || targets.empty()) {
    throw InvalidInput("learn_fusion_weights: source and target sets must be non-empty");
  }
  if (config.pairs == 0) throw InvalidInput("learn_fusion_weights: pairs must be positive");
  const auto n = static_cast<std::size_t>(sources.front().rows());
  const BandSplit split = config.band_cutoff == 0 ? BandSplit::default_for(n) : BandSplit(config.band_cutoff);
  const GraphOptions graph{config.k, false};

  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(class_id) + 1000));
  std::vector<std::size_t> order(sources.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng.engine());

  std::vector<GraphBasis> source_bases(sources.size());
  std::vector<bool> have_basis(sources.size(), false);
  std::vector<FusionPair> pairs;
  pairs.reserve(config.pairs);
  for (std::size_t p = 0; p < config.pairs; ++p) {
    const std::size_t s = order[p % order.size()];
    if (!have_basis[s]) {
      source_bases[s] = build_basis(sources[s], graph);
      have_basis[s] = true;
    }
    const Points target = resample_to(targets[rng.index(targets.size())], n, rng);
    pairs.emplace_back(sources[s], source_bases[s], target, build_basis(target, graph), split);
  }
  std::vector<Points> benign(sources.begin(), sources.end());
  const FusionObjective objective(std::move(pairs), std::move(benign), scorer);
  return learn_fusion_weights(class_id, objective, config, log);
}

void WeightBank::add(const FusionWeights& weights) { entries_[weights.class_id].push_back(weights.clamped()); }

const std::vector<FusionWeights>& WeightBank::entries(int class_id) const {
  const auto it = entries_.find(class_id);
  if (it == entries_.end() || it->second.empty()) {
    std::ostringstream msg;
    msg << "weight bank has no entries for class " << class_id << "; available classes:";
    for (int c : classes()) msg << ' ' << c;
    throw InvalidInput(msg.str());
  }
  return it->second;
}

std::vector<int> WeightBank::classes() const {
  std::vector<int> out;
  for (const auto& [c, list] : entries_) {
    if (!list.empty()) out.push_back(c);
  }
  return out;
}

std::size_t WeightBank::size() const {
  std::size_t total = 0;
  for (const auto& [c, list] : entries_) total += list.size();
  return total;
}

std::string WeightBank::to_json() const {
  nlohmann::ordered_json doc;
  doc["provenance"] = {{"epochs", provenance.epochs},
                       {"learning_rate", provenance.learning_rate},
                       {"seed", provenance.seed},
                       {"band_cutoff", provenance.band_cutoff},
                       {"shared_discriminator", provenance.shared_discriminator}};
  auto& list = doc["entries"];
  list = nlohmann::ordered_json::array();
  for (const auto& [c, weights] : entries_) {
    for (const auto& w : weights) {
      list.push_back({{"class_id", c}, {"alpha_low", w.alpha_low}, {"alpha_high", w.alpha_high}});
    }
  }
  return doc.dump(2);
}

WeightBank WeightBank::from_json(const std::string& text) {
  WeightBank bank;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.contains("provenance")) {
      const auto& p = doc.at("provenance");
      bank.provenance.epochs = p.value("epochs", 0);
      bank.provenance.learning_rate = p.value("learning_rate", 0.0);
      bank.provenance.seed = p.value("seed", std::uint64_t{0});
      bank.provenance.band_cutoff = p.value("band_cutoff", std::size_t{0});
      bank.provenance.shared_discriminator = p.value("shared_discriminator", false);
    }
    for (const auto& e : doc.at("entries")) {
      const FusionWeights w{e.at("alpha_low").get<double>(), e.at("alpha_high").get<double>(),
                            e.at("class_id").get<int>()};
      if (!(w.alpha_low >= 0.0 && w.alpha_low <= 1.0 && w.alpha_high >= 0.0 && w.alpha_high <= 1.0)) {
        throw InvalidInput("weight bank entry outside [0, 1]");
      }
      bank.add(w);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("weight bank: malformed document: ") + e.what());
  }
  return bank;
}

void WeightBank::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << to_json() << '\n';
}

WeightBank WeightBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

FusionWeights sample_weights(const WeightBank& bank, int class_id, Rng& rng) {
  const auto& list = bank.entries(class_id);
  return list[rng.index(list.size())];
}

}  // namespace geowalk
