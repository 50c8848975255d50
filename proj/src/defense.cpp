// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "geowalk/error.hpp"
#include "geowalk/knn.hpp"
#include "geowalk/rng.hpp"

namespace geowalk {
namespace {

Points gather(const Points& points, const std::vector<Eigen::Index>& rows) {
  Points out(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(rows[i]);
  return out;
}

}  // namespace

Points sor_filter(const Points& points, const DefenseConfig& config) {
  require_finite(points, "sor_filter");
  const auto n = static_cast<std::size_t>(points.rows());
  if (config.sor_k < 1) throw InvalidInput("sor_filter: sor_k must be at least 1");
  if (n <= config.sor_k) throw InvalidInput("sor_filter: need more points than sor_k");
  if (std::isnan(config.sor_alpha)) throw InvalidInput("sor_filter: sor_alpha is NaN");

  const NeighborLists neighbors = knn_indices(points, config.sor_k);
  std::vector<double> stat(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto j : neighbors[i]) {
      stat[i] += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
    }
    stat[i] /= static_cast<double>(config.sor_k);
  }
  const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (const double s : stat) var += (s - mean) * (s - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));
  const double threshold = mean + config.sor_alpha * stddev;

  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(stat[i] > threshold)) keep.push_back(static_cast<Eigen::Index>(i));
  }
  if (keep.empty()) throw InvalidInput("sor_filter: every point was removed");
  return gather(points, keep);
}

Points srs_drop(const Points& points, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("srs_drop: fraction must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(points.rows());
  const auto keep_count = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 - fraction) - 1e-9));
  if (keep_count < kMinCloudPoints) throw InvalidInput("srs_drop: fewer than 4 points would remain");
  std::vector<Eigen::Index> all(n);
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  std::vector<Eigen::Index> keep;
  keep.reserve(keep_count);
  Rng rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(keep), keep_count, rng.engine());
  return gather(points, keep);
}

std::string_view defense_name(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::none: return "none";
    case DefenseKind::sor: return "sor";
    case DefenseKind::srs30: return "srs30";
    case DefenseKind::srs50: return "srs50";
  }
  return "unknown";
}

DefenseKind parse_defense(std::string_view text) {
  for (const auto kind : {DefenseKind::none, DefenseKind::sor, DefenseKind::srs30, DefenseKind::srs50}) {
    if (text == defense_name(kind)) return kind;
  }
  throw InvalidInput("unknown defense '" + std::string(text) + "' (expected none, sor, srs30 or srs50)");
}

DefendedOracle::DefendedOracle(const HardLabelOracle& inner, DefenseKind kind, DefenseConfig config,
                               std::uint64_t seed)
    : inner_(&inner), kind_(kind), config_(config), seed_(seed) {}

Points DefendedOracle::apply(const Points& points) const {
  switch (kind_) {
    case DefenseKind::none: return points;
    case DefenseKind::sor: return sor_filter(points, config_);
    case DefenseKind::srs30: return srs_drop(points, 0.3, mix_seed(seed_, fingerprint(points)));
    case DefenseKind::srs50: return srs_drop(points, 0.5, mix_seed(seed_, fingerprint(points)));
  }
  return points;
}

int DefendedOracle::predict(const Points& points) const { return inner_->predict(apply(points)); }

}  // namespace geowalk
