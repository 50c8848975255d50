// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geowalk/error.hpp"
#include "geowalk/knn.hpp"

namespace geowalk {

BandSplit::BandSplit(std::size_t cutoff) : cutoff_(cutoff) {
  if (cutoff == 0) throw InvalidInput("BandSplit: cutoff must be at least 1");
}

BandSplit BandSplit::default_for(std::size_t n) { return BandSplit(std::max<std::size_t>(1, n / 10)); }

void BandSplit::check(std::size_t n) const {
  if (cutoff_ < 1 || cutoff_ >= n) {
    std::ostringstream msg;
    msg << "BandSplit: cutoff " << cutoff_ << " out of range [1, " << n << ")";
    throw InvalidInput(msg.str());
  }
}

Eigen::MatrixXd knn_adjacency(const Points& points, const GraphOptions& options) {
  const auto neighbors = knn_indices(points, options.k);
  const auto n = points.rows();

  double sigma2 = 1.0;
  if (options.gaussian_weights) {
    double total = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (auto j : neighbors[static_cast<std::size_t>(i)]) {
        total += (points.row(i) - points.row(static_cast<Eigen::Index>(j))).norm();
        ++count;
      }
    }
    const double sigma = total / static_cast<double>(count);
    sigma2 = sigma > 0.0 ? sigma * sigma : 1.0;
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (auto jj : neighbors[static_cast<std::size_t>(i)]) {
      const auto j = static_cast<Eigen::Index>(jj);
      double weight = 1.0;
      if (options.gaussian_weights) {
        weight = std::exp(-(points.row(i) - points.row(j)).squaredNorm() / sigma2);
      }
      w(i, j) = weight;
      w(j, i) = weight;
    }
  }
  return w;
}

Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency) {
  Eigen::MatrixXd laplacian = -adjacency;
  laplacian.diagonal() = adjacency.rowwise().sum();
  return laplacian;
}

GraphBasis decompose_laplacian(const Eigen::MatrixXd& laplacian) {
  const auto n = laplacian.rows();
  if (n == 0 || laplacian.cols() != n) throw InvalidInput("decompose_laplacian: matrix must be square");

  GraphBasis basis;
  basis.eigenvectors = laplacian;  // overwritten in place by LAPACK
  basis.eigenvalues.resize(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                     basis.eigenvectors.data(), static_cast<lapack_int>(n), basis.eigenvalues.data());
  if (info != 0) {
    std::ostringstream msg;
    msg << "decompose_laplacian: dsyevd failed with info=" << info << " on " << n << "x" << n
        << " Laplacian (trace " << laplacian.trace() << ")";
    throw NumericalError(msg.str());
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    double& lambda = basis.eigenvalues(i);
    if (lambda < 0.0) {
      if (lambda < -1e-10) {
        std::ostringstream msg;
        msg << "decompose_laplacian: eigenvalue " << i << " = " << lambda
            << " is negative beyond tolerance";
        throw NumericalError(msg.str());
      }
      lambda = 0.0;
    }
    auto column = basis.eigenvectors.col(i);
    Eigen::Index argmax = 0;
    column.cwiseAbs().maxCoeff(&argmax);
    if (column(argmax) < 0.0) column = -column;
  }
  return basis;
}

GraphBasis build_basis(const Points& points, const GraphOptions& options) {
  require_finite(points, "build_basis");
  if (static_cast<std::size_t>(points.rows()) <= options.k) {
    std::ostringstream msg;
    msg << "build_basis: need n > k, got n=" << points.rows() << " k=" << options.k;
    throw InvalidInput(msg.str());
  }
  GraphBasis basis = decompose_laplacian(graph_laplacian(knn_adjacency(points, options)));
  basis.source_fingerprint = fingerprint(points);
  basis.k = options.k;
  return basis;
}

std::size_t zero_eigenvalue_count(const GraphBasis& basis, double threshold) {
  return static_cast<std::size_t>((basis.eigenvalues.array() < threshold).count());
}

Spectrum gft(const Points& points, const GraphBasis& basis) {
  if (static_cast<std::size_t>(points.rows()) != basis.dimension()) {
    std::ostringstream msg;
    msg << "gft: cloud has " << points.rows() << " points, basis dimension " << basis.dimension();
    throw InvalidInput(msg.str());
  }
  return Spectrum{basis.eigenvectors.transpose() * points, basis.source_fingerprint};
}

Points igft(const Spectrum& spectrum, const GraphBasis& basis, bool allow_foreign) {
  if (spectrum.size() != basis.dimension()) {
    std::ostringstream msg;
    msg << "igft: spectrum has " << spectrum.size() << " coefficients, basis dimension "
        << basis.dimension();
    throw InvalidInput(msg.str());
  }
  if (!allow_foreign && spectrum.basis_fingerprint != basis.source_fingerprint) {
    throw InvalidInput("igft: spectrum was computed under a different basis");
  }
  return basis.eigenvectors * spectrum.coefficients;
}

Bands split_bands(const Spectrum& spectrum, const BandSplit& split) {
  split.check(spectrum.size());
  const auto cutoff = static_cast<Eigen::Index>(split.cutoff());
  const auto n = spectrum.coefficients.rows();
  return Bands{spectrum.coefficients.topRows(cutoff), spectrum.coefficients.bottomRows(n - cutoff)};
}

Points join_bands(const Bands& bands) {
  Points out(bands.low.rows() + bands.high.rows(), 3);
  out << bands.low, bands.high;
  return out;
}

}  // namespace geowalk
