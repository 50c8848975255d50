// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "geowalk/point_cloud.hpp"

namespace geowalk {

/// Neighbor count used for every KNN graph unless configured otherwise.
inline constexpr std::size_t kDefaultGraphK = 10;

struct GraphOptions {
  std::size_t k = kDefaultGraphK;
  /// exp(-d^2 / sigma^2) edge weights, sigma the mean KNN distance.
  /// Off by default: edges are unweighted.
  bool gaussian_weights = false;
};

/// Eigenbasis of a KNN-graph Laplacian; the GFT operator for one cloud.
///
/// Columns of `eigenvectors` are orthonormal and ordered by ascending
/// eigenvalue. Each column's largest-magnitude entry is positive.
struct GraphBasis {
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd eigenvalues;
  std::uint64_t source_fingerprint = 0;
  std::size_t k = 0;

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// GFT coefficients, one (x, y, z) triple per graph frequency.
struct Spectrum {
  Points coefficients;
  std::uint64_t basis_fingerprint = 0;

  std::size_t size() const { return static_cast<std::size_t>(coefficients.rows()); }
};

/// Frequencies [0, cutoff) form the low band, [cutoff, n) the high band.
class BandSplit {
 public:
  explicit BandSplit(std::size_t cutoff);
  /// floor(n / 10), at least 1.
  static BandSplit default_for(std::size_t n);

  std::size_t cutoff() const { return cutoff_; }
  /// Throws InvalidInput unless 1 <= cutoff < n.
  void check(std::size_t n) const;

 private:
  std::size_t cutoff_;
};

struct Bands {
  Points low;
  Points high;
};

/// Symmetrized KNN adjacency: i~j when either lists the other.
Eigen::MatrixXd knn_adjacency(const Points& points, const GraphOptions& options = {});
/// Combinatorial Laplacian D - W.
Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency);

/// Full eigendecomposition of a symmetric Laplacian. Eigenvalues within
/// -1e-10 of zero are clamped; larger negative ones raise NumericalError.
GraphBasis decompose_laplacian(const Eigen::MatrixXd& laplacian);

/// KNN graph, Laplacian, and eigendecomposition of one cloud. Requires n > k.
GraphBasis build_basis(const Points& points, const GraphOptions& options = {});
inline GraphBasis build_basis(const Points& points, std::size_t k) {
  return build_basis(points, GraphOptions{k, false});
}

/// Number of eigenvalues below `threshold`; equals the number of connected
/// components of the graph.
std::size_t zero_eigenvalue_count(const GraphBasis& basis, double threshold = 1e-8);

/// coefficients = U^T P
Spectrum gft(const Points& points, const GraphBasis& basis);
/// P = U * coefficients. A fingerprint mismatch throws unless `allow_foreign`.
Points igft(const Spectrum& spectrum, const GraphBasis& basis, bool allow_foreign = false);

Bands split_bands(const Spectrum& spectrum, const BandSplit& split);
/// Inverse of split_bands on the coefficient rows.
Points join_bands(const Bands& bands);

}  // namespace geowalk
