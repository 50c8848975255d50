// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "geowalk/oracle.hpp"
#include "geowalk/point_cloud.hpp"

namespace geowalk {

struct DefenseConfig {
  std::size_t sor_k = 2;
  double sor_alpha = 1.1;
};

/// Statistical outlier removal: drops points whose mean distance to their
/// sor_k nearest neighbours exceeds mean + sor_alpha * stddev of that
/// statistic over the cloud. Survivors keep their order.
Points sor_filter(const Points& points, const DefenseConfig& config = {});

/// Uniform random subset of ceil(n * (1 - fraction)) points, order kept.
Points srs_drop(const Points& points, double fraction, std::uint64_t seed);

enum class DefenseKind { none, sor, srs30, srs50 };
std::string_view defense_name(DefenseKind kind);
/// Parses "none", "sor", "srs30" or "srs50".
DefenseKind parse_defense(std::string_view text);

/// Applies a defense to every query before it reaches the victim.
///
/// SRS draws its subset from `seed` mixed with the cloud's fingerprint, so
/// the defended oracle stays deterministic for identical input.
class DefendedOracle final : public HardLabelOracle {
 public:
  DefendedOracle(const HardLabelOracle& inner, DefenseKind kind, DefenseConfig config = {}, std::uint64_t seed = 0);

  int predict(const Points& points) const override;
  Points apply(const Points& points) const;
  DefenseKind kind() const { return kind_; }

 private:
  const HardLabelOracle* inner_;
  DefenseKind kind_;
  DefenseConfig config_;
  std::uint64_t seed_;
};

}  // namespace geowalk
