// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "geowalk/attack.hpp"
#include "geowalk/dataset.hpp"
#include "geowalk/error.hpp"
#include "geowalk/native_classifier.hpp"
#include "support.hpp"

using namespace geowalk;
using geowalk::testing::random_cloud;

namespace {

double frob(const Points& a, const Points& b) { return (a.array() * b.array()).sum(); }

// Unit vector orthogonal to `u`.
Points orthogonal_unit(const Points& u, Rng& rng) {
  Points v = rng.normal_points(static_cast<std::size_t>(u.rows()));
  v -= frob(v, u) * u;
  return normalized(v);
}

struct LinearSetup {
  Points source;
  Points g;
  double offset = 0.0;
  std::vector<Points> targets;
};

// Source on the label-0 side of a hyperplane; targets shifted across it.
LinearSetup linear_setup(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  LinearSetup s;
  s.source = random_cloud(n, rng, 0.5);
  Points ex = Points::Zero(static_cast<Eigen::Index>(n), 3);
  ex.col(0).setOnes();
  s.g = normalized(0.5 * normalized(ex) + normalized(rng.normal_points(n)));
  s.offset = frob(s.source, s.g) + 0.05;
  for (double shift : {0.3, 0.35, 0.4}) {
    Points t = s.source;
    t.col(0).array() += shift;
    s.targets.push_back(t);
  }
  return s;
}

AttackConfig quick_config() {
  AttackConfig c;
  c.rounds = 6;
  c.normal_samples_base = 5.0;
  c.convergence_window = 0;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("semicircle point examples") {
  Rng rng(1);
  const Points s = random_cloud(10, rng);
  const Points b = random_cloud(10, rng);
  const Points u = normalized(b - s);
  CHECK((point_on_semicircle(s, b, u, u) - b).cwiseAbs().maxCoeff() < 1e-12);
  const Points perp = orthogonal_unit(u, rng);
  CHECK((point_on_semicircle(s, b, perp, u) - s).cwiseAbs().maxCoeff() < 1e-12);
  const Points sixty = std::cos(std::numbers::pi / 3) * u + std::sin(std::numbers::pi / 3) * perp;
  const Points c = point_on_semicircle(s, b, sixty, u);
  CHECK((c - s).norm() / (b - s).norm() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(point_on_semicircle(s, random_cloud(9, rng), u, u), InvalidInput);
}

TEST_CASE("semicircle distance ratio equals the cosine") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 4 + rng.index(60);
    const Points s = random_cloud(n, rng);
    const Points b = random_cloud(n, rng);
    const Points u = normalized(b - s);
    const Points xi = normalized(rng.normal_points(n));
    const Points c = point_on_semicircle(s, b, xi, u);
    const double ratio = (c - s).norm() / (b - s).norm();
    CHECK(std::abs(ratio - std::abs(frob(xi, u))) < 1e-12);
    // Thales: the point sees the diameter s-b at a right angle
    CHECK(std::abs(frob(c - s, c - b)) < 1e-10);
  }
}

TEST_CASE("helpers") {
  Rng rng(3);
  const Points a = normalized(rng.normal_points(5));
  CHECK(a.norm() == doctest::Approx(1.0));
  CHECK(angle_between(a, a) == 0.0);
  CHECK(angle_between(a, -a) == doctest::Approx(std::numbers::pi));
  CHECK(angle_between(a, orthogonal_unit(a, rng)) == doctest::Approx(std::numbers::pi / 2));
  CHECK_THROWS_AS(normalized(Points::Zero(5, 3)), NumericalError);
}

TEST_CASE("estimate_normal small cases") {
  Rng rng(4);
  const Points boundary = random_cloud(6, rng);
  SUBCASE("one sample returns plus or minus that sample's direction") {
    const ConstantOracle adversarial(1);
    QueryContext q(adversarial, 0);
    Rng a(7);
    Rng replay(7);
    const Points m = estimate_normal(boundary, q, 1, 0.1, a);
    const Points v = replay.normal_points(6);
    CHECK((m - normalized(v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(q.counter().count(Phase::normal_estimation) == 1);
  }
  SUBCASE("all-adversarial probes sum to the normalized sample mean") {
    const ConstantOracle adversarial(1);
    QueryContext q(adversarial, 0);
    Rng a(8);
    Rng replay(8);
    const Points m = estimate_normal(boundary, q, 5, 0.1, a);
    Points sum = Points::Zero(6, 3);
    for (int i = 0; i < 5; ++i) sum += replay.normal_points(6);
    CHECK((m - normalized(sum)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("non-adversarial probes flip the sign") {
    const ConstantOracle benign(0);
    QueryContext q(benign, 0);
    Rng a(9);
    Rng replay(9);
    const Points m = estimate_normal(boundary, q, 1, 0.1, a);
    CHECK((m + normalized(replay.normal_points(6))).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("bad arguments") {
    const ConstantOracle o(0);
    QueryContext q(o, 0);
    CHECK_THROWS_AS(estimate_normal(boundary, q, 0, 0.1, rng), InvalidInput);
    CHECK_THROWS_AS(estimate_normal(boundary, q, 3, 0.0, rng), InvalidInput);
  }
}

TEST_CASE("estimate_normal recovers a hyperplane normal") {
  Rng rng(5);
  const std::size_t n = 8;
  const Points g = normalized(rng.normal_points(n));
  const Points anchor = random_cloud(n, rng);
  const LinearOracle oracle(g, frob(anchor, g));
  QueryContext q(oracle, 0);
  int close = 0;
  for (int t = 0; t < 20; ++t) {
    const Points m = estimate_normal(anchor, q, 1000, 1e-3, rng);
    if (angle_between(m, g) < 15.0 * std::numbers::pi / 180.0) ++close;
  }
  CHECK(close >= 19);

  // spectral frame answers in coefficient space; mapping back recovers g
  const WalkFrame frame = WalkFrame::spectral(build_basis(anchor, 4));
  const Points m = estimate_normal(anchor, q, 2000, 1e-3, rng, frame);
  CHECK(angle_between(frame.to_cloud(m), g) < 15.0 * std::numbers::pi / 180.0);
}

TEST_CASE("walk frames are isometries") {
  Rng rng(6);
  const Points p = random_cloud(30, rng);
  const WalkFrame spectral = WalkFrame::spectral(build_basis(p, 5));
  CHECK(spectral.domain() == WalkDomain::spectral);
  const Points x = random_cloud(30, rng);
  CHECK(std::abs(spectral.to_domain(x).norm() - x.norm()) < 1e-10);
  CHECK((spectral.to_cloud(spectral.to_domain(x)) - x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(WalkFrame::coordinate().to_domain(x) == x);
  CHECK(domain_name(WalkDomain::spectral) == "spectral");
}

TEST_CASE("initial search direction") {
  Rng rng(7);
  const Points s = random_cloud(12, rng);
  const Points b = random_cloud(12, rng);
  const Points u = normalized(b - s);
  const Points m = orthogonal_unit(u, rng);

  SUBCASE("first probe benign stops at q = 0") {
    const ConstantOracle benign(0);
    QueryContext q(benign, 0);
    const SearchStart start = initial_search_direction(s, b, u, m, q, 10);
    CHECK(start.q == 0);
    CHECK_FALSE(start.capped);
    CHECK((start.xi - normalized(u + m)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(q.counter().total() == 1);
  }
  SUBCASE("always adversarial exhausts max_q") {
    const ConstantOracle adversarial(1);
    QueryContext q(adversarial, 0);
    const SearchStart start = initial_search_direction(s, b, u, m, q, 4);
    CHECK(start.capped);
    CHECK(start.q == 4);
    CHECK(q.counter().total() == 5);
    CHECK((start.xi - normalized(std::ldexp(1.0, -4) * u + m)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("threshold oracle on the distance to the source") {
    // adversarial while the probe keeps at least 60% of the boundary gap
    const double gap = (b - s).norm();
    const FunctionOracle radial([&](const Points& p) { return (p - s).norm() >= 0.6 * gap ? 1 : 0; });
    QueryContext q(radial, 0);
    const SearchStart start = initial_search_direction(s, b, u, m, q, 10);
    CHECK_FALSE(start.capped);
    CHECK(std::abs(frob(start.xi, u)) < 0.6);
    const double previous = std::abs(frob(normalized(std::ldexp(1.0, -(start.q - 1)) * u + m), u));
    CHECK(previous >= 0.6);
  }
}

TEST_CASE("direction bisection") {
  Rng rng(8);
  const Points s = random_cloud(12, rng);
  const Points b = random_cloud(12, rng);
  const Points u = normalized(b - s);
  const Points m = orthogonal_unit(u, rng);
  const double gap = (b - s).norm();
  const FunctionOracle radial([&](const Points& p) { return (p - s).norm() >= 0.5 * gap ? 1 : 0; });
  QueryContext q(radial, 0);
  const DirectionBisection out = bisect_direction(s, b, u, m, u, b, q, 1e-6, 60);
  // the adversarial end converges to the 60-degree direction from u
  CHECK(std::abs(frob(out.xi, u) - 0.5) < 1e-5);
  CHECK((out.cloud - s).norm() >= 0.5 * gap);
  CHECK(out.steps == static_cast<int>(q.counter().total()));

  QueryContext capped(radial, 0);
  const DirectionBisection none = bisect_direction(s, b, u, m, u, b, capped, 1e-6, 0);
  CHECK(none.steps == 0);
  CHECK(none.cloud == b);

  QueryContext verify(radial, 0);
  CHECK_THROWS_AS(bisect_direction(s, b, u, u, u, b, verify, 1e-6, 10, WalkFrame::coordinate(), true),
                  ContractError);
}

TEST_CASE("binary projection") {
  Rng rng(9);
  const LinearSetup lin = linear_setup(16, 1);
  const LinearOracle oracle(lin.g, lin.offset);
  const Points adv = lin.source + 0.5 * lin.g;
  REQUIRE(oracle.predict(adv) == 1);
  REQUIRE(oracle.predict(lin.source) == 0);

  SUBCASE("tolerance of one returns the adversarial end untouched") {
    QueryContext q(oracle, 0);
    CHECK(binary_project(lin.source, adv, q, 1.0) == adv);
    CHECK(q.counter().total() == 0);
  }
  SUBCASE("fine tolerance lands on the plane") {
    QueryContext q(oracle, 0);
    const Points p = binary_project(lin.source, adv, q, std::ldexp(1.0, -20));
    CHECK(q.counter().total() <= 21);
    CHECK(oracle.predict(p) == 1);
    // analytic crossing: beta* where <beta s + (1-beta) adv, g> = offset
    const double sa = frob(lin.source, lin.g);
    const double aa = frob(adv, lin.g);
    const double beta = (aa - lin.offset) / (aa - sa);
    const Points crossing = beta * lin.source + (1.0 - beta) * adv;
    CHECK((p - crossing).norm() <= std::ldexp(1.0, -20) * (adv - lin.source).norm() + 1e-12);
  }
  SUBCASE("bracket verification") {
    QueryContext q(oracle, 0);
    CHECK_THROWS_AS(binary_project(lin.source, lin.source, q, 0.1, true), ContractError);
    CHECK_THROWS_AS(binary_project(lin.source, random_cloud(15, rng), q, 0.1), InvalidInput);
  }
}

TEST_CASE("candidate selection") {
  Rng rng(10);
  const Points source = random_cloud(20, rng);
  std::vector<Points> candidates;
  for (int i = 0; i < 12; ++i) candidates.push_back(source + rng.uniform(0.0, 0.1) * rng.normal_points(20));
  candidates.push_back(source + 5.0 * rng.normal_points(20));  // outside epsilon
  AttackConfig config;
  config.epsilon = 0.3;

  // adversarial iff the first coordinate of the first point is positive
  const FunctionOracle oracle([&](const Points& p) { return p(0, 0) > source(0, 0) ? 1 : 0; });
  QueryContext q(oracle, 0);
  const std::size_t chosen = select_best_candidate(source, candidates, q, config);

  std::size_t expected = candidates.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const DistanceReport r = combined_distance(source, candidates[i], config.gamma1, config.gamma2);
    if (r.max_pointwise > config.epsilon || oracle.predict(candidates[i]) != 1) continue;
    if (r.d_combined < best) {
      best = r.d_combined;
      expected = i;
    }
  }
  REQUIRE(expected < candidates.size());
  CHECK(chosen == expected);
  CHECK(q.counter().total() <= 12);

  std::uint64_t admissible = 0;
  for (const auto& c : candidates) admissible += combined_distance(source, c).max_pointwise <= config.epsilon;
  const ConstantOracle benign(0);
  QueryContext none(benign, 0);
  CHECK_THROWS_AS(select_best_candidate(source, candidates, none, config), GenerationFailure);
  CHECK(none.counter().total() == admissible);
}

TEST_CASE("query context cap and observer") {
  const ConstantOracle o(1);
  QueryContext q(o, 0, 3);
  int seen = 0;
  q.set_observer([&](const ProbeEvent& e) {
    ++seen;
    CHECK(e.phi == 1);
  });
  const Points p = Points::Zero(4, 3);
  for (int i = 0; i < 3; ++i) q.phi(p, Phase::projection);
  CHECK_THROWS_AS(q.phi(p, Phase::projection), QueryBudgetExhausted);
  CHECK(seen == 3);
  q.add_prior(q.counts());
  CHECK(q.counts().total() == 6);
}

TEST_CASE("config validation") {
  AttackConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.normal_samples(1) == 30);
  CHECK(c.normal_samples(4) == 60);
  CHECK(c.normal_samples(2) == 43);
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = AttackConfig{};
  c.min_progress = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = AttackConfig{};
  c.rounds = -1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("run_attack against a linear victim") {
  const LinearSetup lin = linear_setup(32, 2);
  const LinearOracle oracle(lin.g, lin.offset);
  const PointCloud source(lin.source, 0);
  AttackConfig config = quick_config();
  config.epsilon = 1.0;

  SUBCASE("zero rounds stops at the projected candidate") {
    config.rounds = 0;
    const AttackResult r = run_attack(source, lin.targets, oracle, nullptr, config);
    CHECK(r.status == AttackStatus::completed);
    CHECK(r.success);
    CHECK(r.iterations == 0);
    CHECK(r.best.size() == 1);
    CHECK(r.adversarial == r.best.front().cloud);
    CHECK(r.queries[Phase::normal_estimation] == 0);
  }
  SUBCASE("determinism, accounting and monotonicity") {
    const InstrumentedOracle counted(oracle);
    std::uint64_t observed = 0;
    bool safe = true;
    const Points& s = lin.source;
    const AttackResult a = run_attack(source, lin.targets, counted, nullptr, config, [&](const ProbeEvent& e) {
      ++observed;
      if (e.phase == Phase::semicircle_search) safe = safe && (e.cloud - s).norm() <= e.boundary_gap + 1e-9;
    });
    const AttackResult b = run_attack(source, lin.targets, oracle, nullptr, config);
    CHECK(a == b);
    CHECK(a.success);
    CHECK(counted.calls() == a.queries.total());
    CHECK(observed == a.queries.total());
    CHECK(safe);
    for (std::size_t i = 1; i < a.best.size(); ++i) CHECK(a.best[i].distance.d_norm <= a.best[i - 1].distance.d_norm);
    for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i].queries >= a.trace[i - 1].queries);
    CHECK(a.distance.d_norm <= a.initial_boundary.d_norm);
    CHECK(oracle.predict(a.adversarial) == 1);

    config.seed = 4;
    const AttackResult c = run_attack(source, lin.targets, oracle, nullptr, config);
    CHECK_FALSE(c.adversarial == a.adversarial);
  }
  SUBCASE("query cap") {
    config.query_cap = 40;
    const AttackResult r = run_attack(source, lin.targets, oracle, nullptr, config);
    CHECK(r.status == AttackStatus::query_cap);
    CHECK(r.queries.total() == 40);
  }
  SUBCASE("already adversarial") {
    const PointCloud wrong(lin.source, 1);
    const AttackResult r = run_attack(wrong, lin.targets, oracle, nullptr, config);
    CHECK(r.status == AttackStatus::already_adversarial);
    CHECK(r.queries.total() == 1);
  }
  SUBCASE("generation failure") {
    config.epsilon = 1e-3;
    const AttackResult r = run_attack(source, lin.targets, oracle, nullptr, config);
    CHECK(r.status == AttackStatus::generation_failed);
    CHECK_FALSE(r.success);
    CHECK(r.message.find("no admissible candidate") != std::string::npos);
  }
  SUBCASE("unlabelled source") {
    CHECK_THROWS_AS(run_attack(PointCloud(lin.source), lin.targets, oracle, nullptr, config), InvalidInput);
  }
}

TEST_CASE("walk approaches the hyperplane distance") {
  const LinearSetup lin = linear_setup(32, 3);
  const LinearOracle oracle(lin.g, lin.offset);
  AttackConfig config = quick_config();
  config.epsilon = 1.0;
  config.rounds = 40;
  config.normal_samples_base = 30.0;
  const AttackResult r = run_attack(PointCloud(lin.source, 0), lin.targets, oracle, nullptr, config);
  REQUIRE(r.success);
  const double truth = std::abs(oracle.signed_distance(lin.source));
  const double reached = r.distance.d_norm;
  CHECK(reached >= truth - 1e-9);
  CHECK(reached <= 1.2 * truth);
}

TEST_CASE("convergence stop") {
  const LinearSetup lin = linear_setup(32, 4);
  const LinearOracle oracle(lin.g, lin.offset);
  AttackConfig config = quick_config();
  config.epsilon = 1.0;
  config.rounds = 100;
  config.convergence_window = 3;
  config.min_progress = 0.5;
  const AttackResult r = run_attack(PointCloud(lin.source, 0), lin.targets, oracle, nullptr, config);
  CHECK(r.iterations < 100);
  CHECK(r.iterations >= 3);
  const auto& t = r.trace;
  CHECK(t.back().d_norm > 0.5 * t[t.size() - 4].d_norm);
}

TEST_CASE("walk_boundary from a known adversarial cloud") {
  const LinearSetup lin = linear_setup(24, 5);
  const LinearOracle oracle(lin.g, lin.offset);
  AttackConfig config = quick_config();
  config.epsilon = 2.0;
  const Points start = lin.source + 0.4 * lin.g;
  const AttackResult r = walk_boundary(PointCloud(lin.source, 0), start, oracle, config);
  CHECK(r.success);
  CHECK(r.distance.d_norm <= d_norm(lin.source, start));
  CHECK_THROWS_AS(walk_boundary(PointCloud(lin.source, 0), start.topRows(23), oracle, config), InvalidInput);
}

TEST_CASE("attack on the native classifier") {
  SyntheticDatasetSpec spec;
  spec.n_points = 64;
  spec.instances_per_class = 5;
  spec.seed = 7;
  const Dataset data = generate_dataset(spec);
  const NativeCentroidClassifier clf = train_native_classifier(data.train);
  AttackConfig config = quick_config();
  config.epsilon = 0.5;
  int successes = 0;
  int attempts = 0;
  for (const auto& c : data.test) {
    if (clf.predict(c.points()) != c.label()) continue;
    ++attempts;
    const AttackResult r = run_attack(c, data.train_excluding(*c.label()), clf, nullptr, config);
    if (r.status == AttackStatus::generation_failed) continue;
    REQUIRE(r.status == AttackStatus::completed);
    ++successes;
    CHECK(clf.predict(r.adversarial) != *c.label());
    CHECK(r.distance.max_pointwise <= config.epsilon + 1e-9);
  }
  CHECK(attempts > 0);
  CHECK(successes > 0);
}
