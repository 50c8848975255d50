// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/oracle.hpp"

#include <cmath>
#include <numeric>

#include "geowalk/error.hpp"

namespace geowalk {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::generation: return "generation";
    case Phase::projection: return "projection";
    case Phase::normal_estimation: return "normal_estimation";
    case Phase::semicircle_search: return "semicircle_search";
  }
  return "unknown";
}

std::uint64_t QueryCounts::total() const {
  return std::accumulate(by_phase.begin(), by_phase.end(), std::uint64_t{0});
}

std::uint64_t QueryCounter::total() const { return snapshot().total(); }

QueryCounts QueryCounter::snapshot() const {
  QueryCounts out;
  for (std::size_t i = 0; i < kPhaseCount; ++i) out.by_phase[i] = counts_[i].load(std::memory_order_relaxed);
  return out;
}

int indicator(const HardLabelOracle& oracle, const Points& points, int ground_truth,
              QueryCounter& counter, Phase phase) {
  const int label = oracle.predict(points);
  counter.record(phase);
  return label != ground_truth ? 1 : -1;
}

LinearOracle::LinearOracle(Points normal, double offset) : normal_(std::move(normal)), offset_(offset) {
  const double norm = normal_.norm();
  if (!(norm > 0.0) || !std::isfinite(offset)) throw InvalidInput("LinearOracle: degenerate hyperplane");
  normal_ /= norm;
  offset_ /= norm;
}

double LinearOracle::signed_distance(const Points& points) const {
  if (points.rows() != normal_.rows()) throw InvalidInput("LinearOracle: cloud size mismatch");
  return frobenius_dot(points, normal_) - offset_;
}

int LinearOracle::predict(const Points& points) const { return signed_distance(points) > 0.0 ? 1 : 0; }

int InstrumentedOracle::predict(const Points& points) const {
  const int label = inner_->predict(points);
  calls_.fetch_add(1);
  return label;
}

}  // namespace geowalk
