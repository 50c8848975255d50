// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/basis_cache.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "geowalk/error.hpp"

namespace geowalk {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw InvalidInput("read_basis: truncated header");
  return v;
}

double get_f64(std::istream& in) {
  double v = 0.0;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw InvalidInput("read_basis: truncated payload");
  return v;
}

}  // namespace

void write_basis(std::ostream& out, const GraphBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.dimension());
  put_u64(out, static_cast<std::uint64_t>(n));
  put_u64(out, basis.k);
  for (Eigen::Index i = 0; i < n; ++i) put_f64(out, basis.eigenvalues(i));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) put_f64(out, basis.eigenvectors(r, c));
  }
}

GraphBasis read_basis(std::istream& in, std::uint64_t source_fingerprint) {
  const std::uint64_t n = get_u64(in);
  const std::uint64_t k = get_u64(in);
  if (n == 0 || n > (1u << 16)) throw InvalidInput("read_basis: implausible dimension");
  GraphBasis basis;
  const auto dim = static_cast<Eigen::Index>(n);
  basis.eigenvalues.resize(dim);
  basis.eigenvectors.resize(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) basis.eigenvalues(i) = get_f64(in);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) basis.eigenvectors(r, c) = get_f64(in);
  }
  basis.k = k;
  basis.source_fingerprint = source_fingerprint;
  return basis;
}

BasisCache::BasisCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::filesystem::path BasisCache::path_for(std::uint64_t fp, std::size_t k) const {
  std::ostringstream name;
  name << std::hex << std::setw(16) << std::setfill('0') << fp << "_k" << std::dec << k << ".basis";
  return directory_ / name.str();
}

GraphBasis BasisCache::get_or_build(const Points& points, const GraphOptions& options) {
  const std::uint64_t fp = fingerprint(points);
  const auto path = path_for(fp, options.k);
  if (!options.gaussian_weights && std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    GraphBasis basis = read_basis(in, fp);
    if (basis.dimension() == static_cast<std::size_t>(points.rows()) && basis.k == options.k) {
      return basis;
    }
  }
  GraphBasis basis = build_basis(points, options);
  if (!options.gaussian_weights) {
    std::ofstream out(path, std::ios::binary);
    write_basis(out, basis);
  }
  return basis;
}

}  // namespace geowalk
