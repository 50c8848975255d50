// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "geowalk/error.hpp"

namespace geowalk {
namespace {

void require_nonempty(const Points& source, const Points& adv, const char* what) {
  if (source.rows() == 0 || adv.rows() == 0) {
    throw InvalidInput(std::string(what) + ": empty cloud");
  }
}

// Squared distance from each adversarial point to its nearest source point.
std::vector<double> nearest_squared(const Points& source, const Points& adv) {
  std::vector<double> out(static_cast<std::size_t>(adv.rows()));
  for (Eigen::Index i = 0; i < adv.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < source.rows(); ++j) {
      const double dx = adv(i, 0) - source(j, 0);
      const double dy = adv(i, 1) - source(j, 1);
      const double dz = adv(i, 2) - source(j, 2);
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace

double d_norm(const Points& source, const Points& adv) {
  if (source.rows() != adv.rows()) {
    std::ostringstream msg;
    msg << "d_norm: size mismatch (" << source.rows() << " vs " << adv.rows() << ")";
    throw InvalidInput(msg.str());
  }
  return (adv - source).norm();
}

double d_chamfer(const Points& source, const Points& adv) {
  require_nonempty(source, adv, "d_chamfer");
  const auto nearest = nearest_squared(source, adv);
  double sum = 0.0;
  for (double d : nearest) sum += d;
  return sum / static_cast<double>(nearest.size());
}

double d_hausdorff(const Points& source, const Points& adv) {
  require_nonempty(source, adv, "d_hausdorff");
  const auto nearest = nearest_squared(source, adv);
  return *std::max_element(nearest.begin(), nearest.end());
}

DistanceReport combined_distance(const Points& source, const Points& adv, double gamma1,
                                 double gamma2) {
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) {
    throw InvalidInput("combined_distance: gamma weights must be non-negative");
  }
  require_nonempty(source, adv, "combined_distance");
  const auto nearest = nearest_squared(source, adv);

  DistanceReport report;
  double sum = 0.0;
  double worst = 0.0;
  for (double d : nearest) {
    sum += d;
    worst = std::max(worst, d);
  }
  report.d_chamfer = sum / static_cast<double>(nearest.size());
  report.d_hausdorff = worst;
  report.d_norm = d_norm(source, adv);
  report.max_pointwise = std::sqrt(worst);
  report.d_combined = report.d_chamfer + gamma1 * report.d_hausdorff + gamma2 * report.d_norm;
  return report;
}

double symmetric_chamfer(const Points& a, const Points& b) {
  require_nonempty(a, b, "symmetric_chamfer");
  // ||x||^2 + ||y||^2 - 2 x.y through one matrix product.
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd dist = -2.0 * (a * b.transpose());
  dist.colwise() += na;
  dist.rowwise() += nb.transpose();
  dist = dist.cwiseMax(0.0);
  return dist.rowwise().minCoeff().mean() + dist.colwise().minCoeff().mean();
}

}  // namespace geowalk
