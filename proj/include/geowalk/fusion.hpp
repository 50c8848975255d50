// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "geowalk/point_cloud.hpp"
#include "geowalk/rng.hpp"
#include "geowalk/spectral.hpp"

namespace geowalk {

/// Per-band mixing weights: 1 keeps the source band, 0 takes the target band.
struct FusionWeights {
  double alpha_low = 0.5;
  double alpha_high = 0.5;
  int class_id = -1;

  /// Copy with both weights clamped to [0, 1].
  FusionWeights clamped() const;
  bool operator==(const FusionWeights&) const = default;
};

/// Spectrum fusion of one source/target pair with both bases precomputed.
///
/// Each cloud is transformed under its own basis; the fused spectrum is
/// inverted with the source basis, so the result keeps the source's point
/// order and fuse(1, 1) reproduces the source. Since fusion is affine in the
/// weights, the four band images are cached and fuse() is a linear combination.
class FusionPair {
 public:
  FusionPair(const Points& source, const GraphBasis& source_basis, const Points& target,
             const GraphBasis& target_basis, const BandSplit& split);
  FusionPair(const Points& source, const Points& target, const BandSplit& split,
             const GraphOptions& graph = {});

  Points fuse(double alpha_low, double alpha_high) const;
  Points fuse(const FusionWeights& weights) const { return fuse(weights.alpha_low, weights.alpha_high); }

  const Points& source() const { return source_; }
  /// ||(U_t^T target)_L - (U_s^T source)_L||_F. The low-band deviation of
  /// fuse(a, .) from the source is |1 - a| times this.
  double low_band_gap() const { return low_gap_; }
  /// Same over all frequencies.
  double spectrum_gap() const { return full_gap_; }
  /// True if the source graph has more than one connected component.
  bool source_disconnected() const { return source_disconnected_; }

 private:
  void init(const GraphBasis& source_basis, const GraphBasis& target_basis, const BandSplit& split);

  Points source_;
  Points target_;
  Points source_low_;
  Points source_high_;
  Points target_low_;
  Points target_high_;
  double low_gap_ = 0.0;
  double full_gap_ = 0.0;
  bool source_disconnected_ = false;
};

/// Builds both bases and fuses once. Equal point counts are required;
/// resample the target first when sizes differ.
Points fuse_spectra(const Points& source, const Points& target, const FusionWeights& weights,
                    const BandSplit& split, std::size_t k = kDefaultGraphK);

/// ||(U^T fused)_L - (U^T source)_L||_F with U the source basis.
double low_freq_reg(const Points& source, const Points& fused, const BandSplit& split,
                    const GraphBasis& source_basis);

/// Uniform random subset of `n` rows, original order kept.
Points random_subset(const Points& points, std::size_t n, Rng& rng);
/// Farthest-point subset of `n` rows seeded at a random start, original order kept.
Points farthest_point_subset(const Points& points, std::size_t n, Rng& rng);
/// Brings a target cloud to exactly `n` points: unchanged if equal, farthest-point
/// subset if larger. Smaller clouds are rejected.
Points resample_to(const Points& points, std::size_t n, Rng& rng);

}  // namespace geowalk
