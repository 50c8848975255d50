// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geowalk/error.hpp"
#include "geowalk/metrics.hpp"
#include "geowalk/oracle.hpp"
#include "geowalk/rng.hpp"
#include "geowalk/spectral.hpp"
#include "geowalk/weight_learning.hpp"

namespace geowalk {

struct AttackConfig {
  double gamma1 = kDefaultGamma1;
  double gamma2 = kDefaultGamma2;
  /// Largest allowed distance from a candidate point to its nearest source point.
  double epsilon = 0.2;
  std::size_t k = kDefaultGraphK;
  /// Walking rounds R.
  int rounds = 100;
  /// Normal-estimation samples at round t: ceil(normal_samples_base * sqrt(t)).
  double normal_samples_base = 30.0;
  /// 0 selects floor(n / 10).
  std::size_t band_cutoff = 0;
  double beta_tolerance = 1e-3;
  /// Radians.
  double angle_tolerance = 1e-2;
  int max_q = 10;
  int max_direction_steps = 30;
  /// Probe radius as a fraction of the current boundary gap.
  double probe_scale = 1e-2;
  /// Relative gap reduction below which a coordinate step counts as stalled
  /// and the spectral step is tried.
  double stall_tolerance = 1e-4;
  /// Stop after this many consecutive rounds without an accepted step. 0 never stops early.
  int patience = 0;
  /// Stop once d_norm shrank by less than `min_progress` (relative) over the
  /// last `convergence_window` rounds. A window of 0 never stops early.
  int convergence_window = 10;
  double min_progress = 0.1;
  std::uint64_t query_cap = 30000;
  std::uint64_t seed = 0;
  /// Targets per attack drawn by the batch driver.
  std::size_t target_pool = 10;
  /// Re-query both ends of every bisection bracket and fail on inconsistency.
  bool verify_brackets = false;

  std::size_t normal_samples(int round) const;
  /// Throws InvalidInput on non-positive or non-finite settings.
  void validate() const;
  bool operator==(const AttackConfig&) const = default;
};

/// Raised by QueryContext when the query cap is reached.
class QueryBudgetExhausted : public Error {
 public:
  using Error::Error;
};

struct ProbeEvent {
  Phase phase;
  int iteration;
  const Points& cloud;
  int phi;
  /// ||P_b - P_s|| at the time of the query; NaN outside stage two.
  double boundary_gap;
  /// |<xi, u>| for semicircle probes, NaN otherwise.
  double semicircle_cos;
};
using ProbeObserver = std::function<void(const ProbeEvent&)>;

/// Charges every query of one attack to a phase, enforces the query cap and
/// forwards each answered query to an optional observer.
class QueryContext {
 public:
  QueryContext(const HardLabelOracle& oracle, int ground_truth,
               std::uint64_t cap = std::numeric_limits<std::uint64_t>::max());

  /// +1 if the cloud is misclassified, -1 otherwise.
  int phi(const Points& cloud, Phase phase, double semicircle_cos = std::numeric_limits<double>::quiet_NaN());

  int ground_truth() const { return ground_truth_; }
  const QueryCounter& counter() const { return counter_; }
  /// Queries of this context plus any prior run it continues.
  QueryCounts counts() const;
  void add_prior(const QueryCounts& prior);

  void set_observer(ProbeObserver observer) { observer_ = std::move(observer); }
  void set_iteration(int iteration, double boundary_gap) {
    iteration_ = iteration;
    boundary_gap_ = boundary_gap;
  }

 private:
  const HardLabelOracle* oracle_;
  int ground_truth_;
  std::uint64_t cap_;
  QueryCounter counter_;
  QueryCounts prior_{};
  ProbeObserver observer_;
  int iteration_ = 0;
  double boundary_gap_ = std::numeric_limits<double>::quiet_NaN();
};

enum class WalkDomain { coordinate, spectral };
std::string_view domain_name(WalkDomain domain);

/// Linear isometry between cloud coordinates and the space the walk moves in:
/// the identity, or GFT coefficients under one fixed basis.
class WalkFrame {
 public:
  static WalkFrame coordinate();
  static WalkFrame spectral(GraphBasis basis);

  WalkDomain domain() const { return domain_; }
  Points to_domain(const Points& cloud) const;
  Points to_cloud(const Points& x) const;

 private:
  WalkDomain domain_ = WalkDomain::coordinate;
  std::shared_ptr<const GraphBasis> basis_;
};

/// Returns the index of the admissible candidate (misclassified, every point
/// within epsilon of the source) with the smallest combined distance; the
/// lowest index wins ties. Candidates failing the epsilon test are not queried.
/// Throws GenerationFailure when none is admissible.
std::size_t select_best_candidate(const Points& source, std::span<const Points> candidates,
                                  QueryContext& queries, const AttackConfig& config);

/// Bisection over beta on beta * source + (1 - beta) * adversarial; returns the
/// adversarial-side end once the bracket is narrower than `tolerance`.
Points binary_project(const Points& source, const Points& adversarial, QueryContext& queries,
                      double tolerance, bool verify_brackets = false);

/// Monte-Carlo boundary normal at `boundary`: normalize(sum_i phi(P_b + v_i) v_i)
/// with v_i Gaussian in the frame's domain, scaled to expected norm
/// `probe_radius`. Returns a unit direction in the frame's domain.
Points estimate_normal(const Points& boundary, QueryContext& queries, std::size_t samples, double probe_radius,
                       Rng& rng, const WalkFrame& frame = WalkFrame::coordinate());

/// P_s + ||P_b - P_s|| * <xi, u> * xi
Points point_on_semicircle(const Points& source, const Points& boundary, const Points& xi, const Points& u);

/// Unit vector; throws NumericalError on a zero input.
Points normalized(const Points& x);
/// Angle in radians between two unit directions.
double angle_between(const Points& a, const Points& b);

struct SearchStart {
  Points xi;
  Points probe;
  int q = 0;
  /// No non-adversarial probe was found within max_q; `xi` is the last
  /// adversarial direction and `probe` its cloud.
  bool capped = false;
};

/// Probes xi_q = normalize(2^-q u + m) for q = 0..max_q on the semicircle
/// spanned by `source` and `boundary` (both in the frame's domain) and stops
/// at the first non-adversarial probe.
SearchStart initial_search_direction(const Points& source, const Points& boundary, const Points& u,
                                     const Points& m, QueryContext& queries, int max_q,
                                     const WalkFrame& frame = WalkFrame::coordinate());

struct DirectionBisection {
  Points xi;
  /// Adversarial cloud at xi (cloud coordinates).
  Points cloud;
  int steps = 0;
};

/// Bisects the angle between a non-adversarial `xi_lower` and an adversarial
/// `xi_upper` on the semicircle; returns the upper end once the angle drops
/// below `tolerance` or after `max_steps`. When the upper end never moves the
/// returned cloud is `upper_cloud` unchanged.
DirectionBisection bisect_direction(const Points& source, const Points& boundary, const Points& u,
                                    Points xi_lower, Points xi_upper, const Points& upper_cloud,
                                    QueryContext& queries, double tolerance, int max_steps,
                                    const WalkFrame& frame = WalkFrame::coordinate(),
                                    bool verify_brackets = false);

enum class AttackStatus { completed, query_cap, already_adversarial, generation_failed, aborted };
std::string_view status_name(AttackStatus status);

struct IterationRecord {
  int iteration = 0;
  WalkDomain domain = WalkDomain::coordinate;
  bool accepted = false;
  bool spectral_tried = false;
  bool q_capped = false;
  std::uint64_t queries = 0;
  double d_norm = 0.0;
  bool operator==(const IterationRecord&) const = default;
};

struct BestEntry {
  int iteration = 0;
  Points cloud;
  DistanceReport distance;
  bool operator==(const BestEntry&) const = default;
};

/// State needed to continue stage two after an abort.
struct AttackCheckpoint {
  Points boundary;
  int next_iteration = 1;
  int stalled_rounds = 0;
  std::vector<BestEntry> best;
  std::vector<IterationRecord> trace;
  DistanceReport initial_candidate;
  QueryCounts queries;
  std::string rng_state;
  bool operator==(const AttackCheckpoint&) const = default;
};

struct AttackResult {
  AttackStatus status = AttackStatus::completed;
  bool success = false;
  int ground_truth = -1;
  Points adversarial;
  DistanceReport distance;
  DistanceReport initial_candidate;
  DistanceReport initial_boundary;
  std::size_t selected_target = 0;
  QueryCounts queries;
  int iterations = 0;
  std::vector<IterationRecord> trace;
  std::vector<BestEntry> best;
  std::uint64_t seed = 0;
  std::optional<AttackCheckpoint> checkpoint;
  std::string message;
  bool operator==(const AttackResult&) const = default;
};

/// Stage one (fusion against each target, candidate selection, projection)
/// followed by R rounds of boundary walking. `bank` supplies fusion weights for
/// the source class; nullptr uses fixed weights (0.5, 0.5).
AttackResult run_attack(const PointCloud& source, std::span<const Points> targets, const HardLabelOracle& oracle,
                        const WeightBank* bank, const AttackConfig& config, const ProbeObserver& observer = {});

/// Stage two alone from a boundary cloud already known to be adversarial.
AttackResult walk_boundary(const PointCloud& source, const Points& boundary, const HardLabelOracle& oracle,
                           const AttackConfig& config, const ProbeObserver& observer = {});

/// Continues stage two from a checkpoint left by an aborted run.
AttackResult resume_attack(const PointCloud& source, const AttackCheckpoint& checkpoint,
                           const HardLabelOracle& oracle, const AttackConfig& config,
                           const ProbeObserver& observer = {});

}  // namespace geowalk
