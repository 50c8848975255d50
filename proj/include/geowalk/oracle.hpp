// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <string_view>

#include "geowalk/point_cloud.hpp"

namespace geowalk {

/// The only channel to the victim: a cloud in, a class label out.
/// Implementations must be deterministic and safe to call concurrently.
class HardLabelOracle {
 public:
  virtual ~HardLabelOracle() = default;
  virtual int predict(const Points& points) const = 0;
};

/// Attack phase a query is charged to.
enum class Phase : std::size_t { generation = 0, projection, normal_estimation, semicircle_search };
inline constexpr std::size_t kPhaseCount = 4;
std::string_view phase_name(Phase phase);

/// Plain snapshot of a QueryCounter.
struct QueryCounts {
  std::array<std::uint64_t, kPhaseCount> by_phase{};

  std::uint64_t total() const;
  std::uint64_t operator[](Phase p) const { return by_phase[static_cast<std::size_t>(p)]; }
  bool operator==(const QueryCounts&) const = default;
};

/// Completed-prediction tally, per phase. Increments are atomic.
class QueryCounter {
 public:
  void record(Phase phase) { counts_[static_cast<std::size_t>(phase)].fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t total() const;
  std::uint64_t count(Phase phase) const {
    return counts_[static_cast<std::size_t>(phase)].load(std::memory_order_relaxed);
  }
  QueryCounts snapshot() const;

 private:
  std::array<std::atomic<std::uint64_t>, kPhaseCount> counts_{};
};

/// +1 when the oracle's label differs from the ground truth (attack
/// succeeds), -1 otherwise. The query is charged to `phase` once the label
/// has been received.
int indicator(const HardLabelOracle& oracle, const Points& points, int ground_truth,
              QueryCounter& counter, Phase phase);

/// Oracle backed by a callable; handy for synthetic victims.
class FunctionOracle final : public HardLabelOracle {
 public:
  explicit FunctionOracle(std::function<int(const Points&)> fn) : fn_(std::move(fn)) {}
  int predict(const Points& points) const override { return fn_(points); }

 private:
  std::function<int(const Points&)> fn_;
};

/// Always answers the same label.
class ConstantOracle final : public HardLabelOracle {
 public:
  explicit ConstantOracle(int label) : label_(label) {}
  int predict(const Points&) const override { return label_; }

 private:
  int label_;
};

/// Analytic two-class victim: label 1 when <P, normal> > offset, else 0.
/// The decision boundary is a hyperplane in n x 3 cloud space, so the
/// minimal perturbation of any cloud is known in closed form.
class LinearOracle final : public HardLabelOracle {
 public:
  LinearOracle(Points normal, double offset);

  int predict(const Points& points) const override;
  /// Signed distance to the hyperplane, positive on the label-1 side.
  double signed_distance(const Points& points) const;
  const Points& normal() const { return normal_; }
  double offset() const { return offset_; }

 private:
  Points normal_;  // unit Frobenius norm
  double offset_;
};

/// Counts every predict() call that reaches the wrapped oracle; used to audit
/// the attack's own accounting.
class InstrumentedOracle final : public HardLabelOracle {
 public:
  explicit InstrumentedOracle(const HardLabelOracle& inner) : inner_(&inner) {}
  int predict(const Points& points) const override;
  std::uint64_t calls() const { return calls_.load(); }

 private:
  const HardLabelOracle* inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace geowalk
