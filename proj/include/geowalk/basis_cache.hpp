// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "geowalk/spectral.hpp"

namespace geowalk {

// Binary basis layout, little-endian:
//   uint64 n, uint64 k, n float64 eigenvalues, n*n float64 eigenvectors (row-major).
void write_basis(std::ostream& out, const GraphBasis& basis);
/// The fingerprint is not stored in the file; the caller supplies it.
GraphBasis read_basis(std::istream& in, std::uint64_t source_fingerprint);

/// On-disk cache of bases, one file per source fingerprint.
class BasisCache {
 public:
  explicit BasisCache(std::filesystem::path directory);

  /// Loads the cached basis for `points` or builds and stores it.
  GraphBasis get_or_build(const Points& points, const GraphOptions& options = {});
  std::filesystem::path path_for(std::uint64_t fingerprint, std::size_t k) const;

 private:
  std::filesystem::path directory_;
};

}  // namespace geowalk
