// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "geowalk/cloud_io.hpp"
#include "geowalk/error.hpp"
#include "geowalk/knn.hpp"
#include "geowalk/metrics.hpp"
#include "geowalk/point_cloud.hpp"
#include "geowalk/rng.hpp"
#include "support.hpp"

using namespace geowalk;
using geowalk::testing::random_cloud;

namespace {

Points make(std::initializer_list<std::array<double, 3>> rows) {
  Points p(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    p.row(i++) << r[0], r[1], r[2];
  }
  return p;
}

double max_norm(const Points& p) { return p.rowwise().norm().maxCoeff(); }

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2) != mix_seed(2, 2));
  Rng a(9);
  Rng b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const auto k = c.index(7);
    CHECK(k < 7);
  }
  Points g = Rng(4).normal_points(5);
  CHECK(g.rows() == 5);
}

TEST_CASE("point cloud rejects non-finite coordinates") {
  Points p = Points::Zero(4, 3);
  p(2, 1) = std::nan("");
  CHECK_THROWS_AS(PointCloud{p}, InvalidInput);
  p(2, 1) = INFINITY;
  CHECK_THROWS_AS(normalize_unit_ball(p), InvalidInput);
  CHECK_THROWS_AS(require_min_points(Points::Zero(3, 3), kMinCloudPoints, "x"), InvalidInput);
}

TEST_CASE("normalize_unit_ball") {
  SUBCASE("four-point example") {
    const Points out = normalize_unit_ball(make({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}}));
    CHECK(out.colwise().mean().norm() < 1e-12);
    CHECK(max_norm(out) == doctest::Approx(1.0).epsilon(1e-12));
    // order preserved: the origin point stays first and is the centroid's mirror
    CHECK(out(0, 0) == doctest::Approx(-out(1, 0) / 3.0));
  }
  SUBCASE("random clouds, idempotent") {
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
      const Points p = random_cloud(256, rng, 3.0);
      const Points once = normalize_unit_ball(p);
      CHECK(std::abs(max_norm(once) - 1.0) < 1e-9);
      const Points twice = normalize_unit_ball(once);
      CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("coincident points are only centred") {
    Points p = Points::Constant(5, 3, 2.5);
    CHECK(normalize_unit_ball(p).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("label and name survive") {
    const PointCloud c(make({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), 3, "q");
    const PointCloud n = normalize_unit_ball(c);
    CHECK(n.label() == 3);
    CHECK(n.name() == "q");
  }
}

TEST_CASE("metric examples") {
  const Points origin = make({{0, 0, 0}});
  CHECK(d_norm(origin, make({{3, 4, 0}})) == 5.0);
  CHECK(d_chamfer(origin, make({{1, 0, 0}})) == 1.0);
  CHECK(d_hausdorff(origin, make({{0, 0, 0}, {0, 0, 2}})) == 4.0);
  CHECK_THROWS_AS(d_norm(origin, make({{0, 0, 0}, {1, 1, 1}})), InvalidInput);
  CHECK_THROWS_AS(d_chamfer(Points(0, 3), origin), InvalidInput);
  CHECK_THROWS_AS(d_hausdorff(origin, Points(0, 3)), InvalidInput);

  Rng rng(1);
  const Points p = random_cloud(20, rng);
  const DistanceReport self = combined_distance(p, p);
  CHECK(self == DistanceReport{});

  const Points q = random_cloud(20, rng);
  const DistanceReport zero_gamma = combined_distance(p, q, 0.0, 0.0);
  CHECK(zero_gamma.d_combined == zero_gamma.d_chamfer);
}

TEST_CASE("metrics match brute force on random pairs") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<std::size_t>(1 + rng.index(32));
    const Points s = random_cloud(n, rng);
    const Points a = random_cloud(n, rng);
    CHECK(std::abs(d_norm(s, a) - testing::brute_norm(s, a)) < 1e-12);
    CHECK(std::abs(d_chamfer(s, a) - testing::brute_chamfer(s, a)) < 1e-12);
    CHECK(std::abs(d_hausdorff(s, a) - testing::brute_hausdorff(s, a)) < 1e-12);
    CHECK(std::abs(symmetric_chamfer(s, a) - testing::brute_symmetric_chamfer(s, a)) < 1e-12);
    const DistanceReport r = combined_distance(s, a, 2.0, 0.5);
    CHECK(std::abs(r.d_combined - (r.d_chamfer + 2.0 * r.d_hausdorff + 0.5 * r.d_norm)) < 1e-12);
    CHECK(std::abs(r.max_pointwise - std::sqrt(testing::brute_hausdorff(s, a))) < 1e-12);
  }
}

TEST_CASE("metric properties") {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const Points a = random_cloud(16, rng);
    const Points b = random_cloud(16, rng);
    const Points c = random_cloud(16, rng);
    CHECK(d_norm(a, b) == doctest::Approx(d_norm(b, a)).epsilon(1e-14));
    CHECK(d_norm(a, c) <= d_norm(a, b) + d_norm(b, c) + 1e-12);
    // permuting adv leaves the one-sided metrics unchanged but not d_norm
    Points shuffled = a;
    shuffled.row(0).swap(shuffled.row(1));
    CHECK(d_chamfer(a, shuffled) == 0.0);
    CHECK(d_hausdorff(a, shuffled) == 0.0);
    CHECK(d_norm(a, shuffled) > 0.0);
  }
}

TEST_CASE("knn examples") {
  const Points line = make({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {4, 0, 0}});
  const auto k1 = knn_indices(line, 1);
  CHECK(k1 == NeighborLists{{1}, {0}, {1}, {2}});
  const auto k2 = knn_indices(line, 2);
  CHECK(k2[0] == std::vector<std::size_t>{1, 2});
  CHECK_THROWS_AS(knn_indices(line, 4), InvalidInput);
}

TEST_CASE("knn matches an exhaustive sort") {
  Rng rng(21);
  const Points p = random_cloud(64, rng);
  const auto got = knn_indices(p, 10);
  CHECK(got == knn_indices(p, 10));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::vector<std::size_t> order(static_cast<std::size_t>(p.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    order.erase(order.begin() + i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return testing::sq_dist(p, i, p, static_cast<Eigen::Index>(a)) <
             testing::sq_dist(p, i, p, static_cast<Eigen::Index>(b));
    });
    order.resize(10);
    CHECK(got[static_cast<std::size_t>(i)] == order);
  }
}

TEST_CASE("xyz and ply round trip at full precision") {
  Rng rng(31);
  const Points p = random_cloud(17, rng) * 1e3;
  std::stringstream xyz;
  write_xyz(xyz, p);
  CHECK(read_xyz(xyz) == p);
  std::stringstream ply;
  write_ply(ply, p);
  CHECK(read_ply(ply) == p);

  std::stringstream commented("# header\n\n1 2 3\n4 5 6\n");
  CHECK(read_xyz(commented).rows() == 2);
  std::stringstream broken("1 2\n");
  CHECK_THROWS_AS(read_xyz(broken), InvalidInput);

  std::stringstream extra(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nend_header\n1 2 3 255\n4 5 6 0\n");
  const Points e = read_ply(extra);
  CHECK(e.rows() == 2);
  CHECK(e(1, 2) == 6.0);
}
