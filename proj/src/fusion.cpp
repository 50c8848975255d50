// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "geowalk/error.hpp"

namespace geowalk {

FusionWeights FusionWeights::clamped() const {
  return FusionWeights{std::clamp(alpha_low, 0.0, 1.0), std::clamp(alpha_high, 0.0, 1.0), class_id};
}

FusionPair::FusionPair(const Points& source, const GraphBasis& source_basis, const Points& target,
                       const GraphBasis& target_basis, const BandSplit& split)
    : source_(source), target_(target) {
  init(source_basis, target_basis, split);
}

FusionPair::FusionPair(const Points& source, const Points& target, const BandSplit& split,
                       const GraphOptions& graph)
    : source_(source), target_(target) {
  if (source.rows() != target.rows()) {
    std::ostringstream msg;
    msg << "fuse_spectra: size mismatch (" << source.rows() << " vs " << target.rows()
        << "); resample the target first";
    throw InvalidInput(msg.str());
  }
  init(build_basis(source, graph), build_basis(target, graph), split);
}

void FusionPair::init(const GraphBasis& source_basis, const GraphBasis& target_basis,
                      const BandSplit& split) {
  const auto n = static_cast<std::size_t>(source_.rows());
  if (static_cast<std::size_t>(target_.rows()) != n || source_basis.dimension() != n ||
      target_basis.dimension() != n) {
    throw InvalidInput("FusionPair: source, target and bases must share one dimension");
  }
  split.check(n);

  const Bands source_bands = split_bands(gft(source_, source_basis), split);
  const Bands target_bands = split_bands(gft(target_, target_basis), split);

  const auto cutoff = static_cast<Eigen::Index>(split.cutoff());
  const auto high = static_cast<Eigen::Index>(n) - cutoff;
  const auto u_low = source_basis.eigenvectors.leftCols(cutoff);
  const auto u_high = source_basis.eigenvectors.rightCols(high);
  source_low_ = u_low * source_bands.low;
  source_high_ = u_high * source_bands.high;
  target_low_ = u_low * target_bands.low;
  target_high_ = u_high * target_bands.high;

  low_gap_ = (target_bands.low - source_bands.low).norm();
  full_gap_ = std::sqrt(low_gap_ * low_gap_ + (target_bands.high - source_bands.high).squaredNorm());

  source_disconnected_ = zero_eigenvalue_count(source_basis) > 1;
  if (source_disconnected_ || zero_eigenvalue_count(target_basis) > 1) {
    std::cerr << "warning: fusion on a disconnected KNN graph; low band mixes component offsets\n";
  }
}

Points FusionPair::fuse(double alpha_low, double alpha_high) const {
  return alpha_low * source_low_ + (1.0 - alpha_low) * target_low_ + alpha_high * source_high_ +
         (1.0 - alpha_high) * target_high_;
}

Points fuse_spectra(const Points& source, const Points& target, const FusionWeights& weights,
                    const BandSplit& split, std::size_t k) {
  const FusionWeights w = weights.clamped();
  if (w.alpha_low != weights.alpha_low || w.alpha_high != weights.alpha_high) {
    throw InvalidInput("fuse_spectra: fusion weights must lie in [0, 1]");
  }
  return FusionPair(source, target, split, GraphOptions{k, false}).fuse(w);
}

double low_freq_reg(const Points& source, const Points& fused, const BandSplit& split,
                    const GraphBasis& source_basis) {
  if (source.rows() != fused.rows()) throw InvalidInput("low_freq_reg: size mismatch");
  const Bands a = split_bands(gft(fused, source_basis), split);
  const Bands b = split_bands(gft(source, source_basis), split);
  return (a.low - b.low).norm();
}

Points random_subset(const Points& points, std::size_t n, Rng& rng) {
  const auto total = static_cast<std::size_t>(points.rows());
  if (n > total) throw InvalidInput("random_subset: requested more points than available");
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> kept;
  kept.reserve(n);
  std::sample(all.begin(), all.end(), std::back_inserter(kept), n, rng.engine());
  Points out(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(kept[i]));
  return out;
}

Points farthest_point_subset(const Points& points, std::size_t n, Rng& rng) {
  const auto total = static_cast<std::size_t>(points.rows());
  if (n == 0 || n > total) throw InvalidInput("farthest_point_subset: bad subset size");
  std::vector<double> nearest(total, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(total, false);
  std::size_t current = rng.index(total);
  for (std::size_t picked = 0; picked < n; ++picked) {
    chosen[current] = true;
    std::size_t next = current;
    double farthest = -1.0;
    for (std::size_t j = 0; j < total; ++j) {
      const double d = (points.row(static_cast<Eigen::Index>(j)) - points.row(static_cast<Eigen::Index>(current))).squaredNorm();
      nearest[j] = std::min(nearest[j], d);
      if (!chosen[j] && nearest[j] > farthest) {
        farthest = nearest[j];
        next = j;
      }
    }
    current = next;
  }
  Points out(static_cast<Eigen::Index>(n), 3);
  Eigen::Index row = 0;
  for (std::size_t j = 0; j < total; ++j) {
    if (chosen[j]) out.row(row++) = points.row(static_cast<Eigen::Index>(j));
  }
  return out;
}

Points resample_to(const Points& points, std::size_t n, Rng& rng) {
  const auto total = static_cast<std::size_t>(points.rows());
  if (total == n) return points;
  if (total < n) {
    std::ostringstream msg;
    msg << "resample_to: target has " << total << " points, fewer than the required " << n;
    throw InvalidInput(msg.str());
  }
  return farthest_point_subset(points, n, rng);
}

}  // namespace geowalk
