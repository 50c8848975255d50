// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <thread>
#include <vector>

#include "geowalk/dataset.hpp"
#include "geowalk/error.hpp"
#include "geowalk/native_classifier.hpp"
#include "geowalk/oracle.hpp"
#include "support.hpp"

using namespace geowalk;
using geowalk::testing::random_cloud;

TEST_CASE("indicator and query accounting") {
  const ConstantOracle always_two(2);
  QueryCounter counter;
  Rng rng(1);
  const Points p = random_cloud(8, rng);
  CHECK(indicator(always_two, p, 2, counter, Phase::generation) == -1);
  CHECK(indicator(always_two, p, 0, counter, Phase::projection) == 1);
  CHECK(indicator(always_two, p, 0, counter, Phase::projection) == 1);
  CHECK(counter.total() == 3);
  CHECK(counter.count(Phase::projection) == 2);
  const QueryCounts snap = counter.snapshot();
  CHECK(snap[Phase::generation] == 1);
  CHECK(snap.total() == 3);
  CHECK(phase_name(Phase::semicircle_search) == "semicircle_search");

  // a failing oracle is not charged
  const FunctionOracle broken([](const Points&) -> int { throw TransportError("down"); });
  CHECK_THROWS_AS(indicator(broken, p, 0, counter, Phase::generation), TransportError);
  CHECK(counter.total() == 3);
}

TEST_CASE("constant oracle flags every other ground truth") {
  const ConstantOracle oracle(4);
  QueryCounter counter;
  Rng rng(2);
  for (int label = 0; label < 8; ++label) {
    const int expected = label == 4 ? -1 : 1;
    CHECK(indicator(oracle, random_cloud(5, rng), label, counter, Phase::generation) == expected);
  }
}

TEST_CASE("counter is thread safe") {
  QueryCounter counter;
  const ConstantOracle oracle(0);
  const Points p = Points::Zero(4, 3);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) indicator(oracle, p, 0, counter, Phase::normal_estimation);
    });
  }
  for (auto& t : threads) t.join();
  CHECK(counter.total() == 4000);
}

TEST_CASE("linear oracle geometry") {
  Rng rng(3);
  Points normal = random_cloud(6, rng);
  const LinearOracle oracle(normal, 0.25);
  CHECK(std::abs(oracle.normal().norm() - 1.0) < 1e-12);
  const Points p = random_cloud(6, rng);
  const double s = oracle.signed_distance(p);
  CHECK(oracle.predict(p) == (s > 0 ? 1 : 0));
  // moving by the signed distance along the normal lands on the plane
  const Points onto = p - s * oracle.normal();
  CHECK(std::abs(oracle.signed_distance(onto)) < 1e-12);
  CHECK(oracle.predict(onto + 1e-9 * oracle.normal()) == 1);
  CHECK(oracle.predict(onto - 1e-9 * oracle.normal()) == 0);
  CHECK_THROWS_AS(LinearOracle(Points::Zero(6, 3), 0.0), InvalidInput);
  CHECK_THROWS_AS(oracle.predict(random_cloud(5, rng)), InvalidInput);
}

TEST_CASE("instrumented oracle counts calls") {
  const ConstantOracle inner(1);
  const InstrumentedOracle wrapped(inner);
  const Points p = Points::Zero(4, 3);
  for (int i = 0; i < 7; ++i) CHECK(wrapped.predict(p) == 1);
  CHECK(wrapped.calls() == 7);
}

TEST_CASE("native classifier features") {
  Rng rng(4);
  const Points sphere = generate_shape(ShapeKind::sphere, 256, 0.0, false, rng);
  const CloudFeatures f = extract_features(sphere);
  CHECK(f(0) >= f(1));
  CHECK(f(1) >= f(2));
  CHECK(f.segment(3, 8).sum() == doctest::Approx(1.0));
  CHECK(f(9) + f(10) == doctest::Approx(1.0));  // sphere points stay near the outer radius
  CHECK(f(11) <= 1.0);
  CHECK(f(12) <= f(11));
  const CloudFeatures no_bbox = extract_features(sphere, FeatureOptions{false});
  CHECK(no_bbox(11) == 0.0);
  CHECK(no_bbox(12) == 0.0);

  Points shuffled = sphere;
  std::vector<Eigen::Index> order(256);
  for (Eigen::Index i = 0; i < 256; ++i) order[static_cast<std::size_t>(i)] = 255 - i;
  for (Eigen::Index i = 0; i < 256; ++i) shuffled.row(i) = sphere.row(order[static_cast<std::size_t>(i)]);
  CHECK((extract_features(shuffled) - f).cwiseAbs().maxCoeff() < 1e-12);

  // scale and translation invariant after unit-ball normalization
  Points moved = sphere * 3.0;
  moved.col(1).array() += 4.0;
  CHECK((extract_features(moved) - f).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("native classifier training") {
  Rng rng(5);
  SUBCASE("one sample per class gives that sample's features") {
    const PointCloud a(generate_shape(ShapeKind::sphere, 64, 0.0, false, rng), 0);
    const PointCloud b(generate_shape(ShapeKind::plane_patch, 64, 0.0, false, rng), 1);
    const std::vector<PointCloud> data{a, b};
    const auto clf = train_native_classifier(data);
    CHECK(clf.num_classes() == 2);
    CHECK((clf.centroids()[0].second - extract_features(a.points())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((clf.centroids()[1].second - extract_features(b.points())).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("separable classes") {
    std::vector<PointCloud> data;
    for (int i = 0; i < 10; ++i) {
      data.emplace_back(generate_shape(ShapeKind::sphere, 128, 0.01, false, rng), 0);
      data.emplace_back(generate_shape(ShapeKind::axis_box, 128, 0.01, false, rng), 1);
    }
    double accuracy = 0.0;
    const auto clf = train_native_classifier(data, {}, &accuracy);
    CHECK(accuracy == 1.0);
    CHECK(clf.accuracy(data) == 1.0);

    const Points& p = data[0].points();
    const Points reversed = p.colwise().reverse();
    CHECK(clf.predict(reversed) == clf.predict(p));

    const auto path = std::filesystem::temp_directory_path() / "geowalk_classifier_test.json";
    clf.save(path);
    const auto loaded = NativeCentroidClassifier::load(path);
    std::filesystem::remove(path);
    for (const auto& c : data) CHECK(loaded.predict(c.points()) == clf.predict(c.points()));
    CHECK(NativeCentroidClassifier::from_json(clf.to_json()).centroids() == clf.centroids());
  }
  SUBCASE("preconditions") {
    std::vector<PointCloud> one_class{PointCloud(generate_shape(ShapeKind::sphere, 32, 0.0, false, rng), 0)};
    CHECK_THROWS_AS(train_native_classifier(one_class), InvalidInput);
    std::vector<PointCloud> unlabelled{PointCloud(generate_shape(ShapeKind::sphere, 32, 0.0, false, rng))};
    CHECK_THROWS_AS(train_native_classifier(unlabelled), InvalidInput);
    CHECK_THROWS_AS(NativeCentroidClassifier::from_json("[1, 2]"), InvalidInput);
  }
}

TEST_CASE("nearest-centroid ties go to the lower class id") {
  const CloudFeatures f = CloudFeatures::Zero();
  const NativeCentroidClassifier clf({{3, f}, {1, f}}, FeatureOptions{});
  Rng rng(6);
  CHECK(clf.predict(generate_shape(ShapeKind::torus, 64, 0.0, false, rng)) == 1);
}
