// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "geowalk/fusion.hpp"

namespace geowalk {
namespace {

constexpr double kDegenerateGap = 1e-9;
constexpr double kZeroDirection = 1e-12;

std::string save_engine(Rng& rng) {
  std::ostringstream out;
  out << rng.engine();
  return out.str();
}

Rng load_engine(const std::string& state) {
  Rng rng(0);
  std::istringstream in(state);
  in >> rng.engine();
  if (!in) throw InvalidInput("attack checkpoint: corrupt generator state");
  return rng;
}

Points semicircle_in_domain(const Points& xs, double radius, const Points& xi, const Points& u) {
  return xs + (radius * frobenius_dot(xi, u)) * xi;
}

struct StepOutcome {
  Points cloud;
  double gap = 0.0;
  bool q_capped = false;
};

StepOutcome walk_step(const Points& source, const Points& boundary, double gap, const WalkFrame& frame,
                      QueryContext& queries, Rng& rng, const AttackConfig& config, int round) {
  const Points xs = frame.to_domain(source);
  const Points xb = frame.to_domain(boundary);
  const Points u = normalized(xb - xs);
  const Points m = estimate_normal(boundary, queries, config.normal_samples(round), config.probe_scale * gap, rng,
                                   frame);
  SearchStart start = initial_search_direction(xs, xb, u, m, queries, config.max_q, frame);
  StepOutcome out;
  if (start.capped) {
    out.cloud = std::move(start.probe);
    out.q_capped = true;
  } else {
    out.cloud = bisect_direction(xs, xb, u, std::move(start.xi), u, boundary, queries, config.angle_tolerance,
                                 config.max_direction_steps, frame, config.verify_brackets)
                    .cloud;
  }
  out.gap = d_norm(source, out.cloud);
  return out;
}

void finalize(AttackResult& result, const Points& source, const AttackConfig& config) {
  if (result.best.empty()) return;
  const auto chosen = std::min_element(result.best.begin(), result.best.end(), [](const auto& a, const auto& b) {
    return a.distance.d_combined < b.distance.d_combined;
  });
  result.adversarial = chosen->cloud;
  result.distance = combined_distance(source, result.adversarial, config.gamma1, config.gamma2);
  result.success = result.status == AttackStatus::completed || result.status == AttackStatus::query_cap;
}

bool converged(const AttackCheckpoint& state, const AttackConfig& config) {
  const auto window = static_cast<std::size_t>(config.convergence_window);
  if (window == 0 || state.trace.size() < window) return false;
  const std::size_t last = state.trace.size() - 1;
  const double before = state.trace.size() > window ? state.trace[last - window].d_norm : state.best.front().distance.d_norm;
  return state.trace[last].d_norm > (1.0 - config.min_progress) * before;
}

void walk(const Points& source, AttackCheckpoint state, QueryContext& queries, const AttackConfig& config,
          AttackResult& result) {
  const auto n = static_cast<std::size_t>(source.rows());
  const bool spectral_available = n > config.k;
  Rng rng = load_engine(state.rng_state);
  Points boundary = state.boundary;
  int round = state.next_iteration;

  for (; round <= config.rounds; ++round) {
    const double gap = d_norm(source, boundary);
    if (gap < kDegenerateGap) break;
    if (config.patience > 0 && state.stalled_rounds >= config.patience) break;

    const std::string rng_before = save_engine(rng);
    const QueryCounts counts_before = queries.counts();
    queries.set_iteration(round, gap);
    try {
      IterationRecord record;
      record.iteration = round;
      StepOutcome step = walk_step(source, boundary, gap, WalkFrame::coordinate(), queries, rng, config, round);
      record.q_capped = step.q_capped;
      if ((gap - step.gap) / gap < config.stall_tolerance && spectral_available) {
        record.spectral_tried = true;
        const WalkFrame frame = WalkFrame::spectral(build_basis(boundary, config.k));
        StepOutcome spectral = walk_step(source, boundary, gap, frame, queries, rng, config, round);
        if (spectral.gap < step.gap) {
          step = std::move(spectral);
          record.domain = WalkDomain::spectral;
          record.q_capped = step.q_capped;
        }
      }
      if (step.gap < gap) {
        boundary = std::move(step.cloud);
        record.accepted = true;
        state.stalled_rounds = 0;
        state.best.push_back(
            {round, boundary, combined_distance(source, boundary, config.gamma1, config.gamma2)});
      } else {
        ++state.stalled_rounds;
      }
      record.queries = queries.counts().total();
      record.d_norm = d_norm(source, boundary);
      state.trace.push_back(record);
      if (converged(state, config)) break;
    } catch (const QueryBudgetExhausted& e) {
      result.status = AttackStatus::query_cap;
      result.message = e.what();
      break;
    } catch (const TransportError& e) {
      result.status = AttackStatus::aborted;
      result.message = e.what();
    } catch (const ProtocolError& e) {
      result.status = AttackStatus::aborted;
      result.message = e.what();
    }
    if (result.status == AttackStatus::aborted) {
      AttackCheckpoint checkpoint = state;
      checkpoint.boundary = boundary;
      checkpoint.next_iteration = round;
      checkpoint.queries = counts_before;
      checkpoint.rng_state = rng_before;
      result.checkpoint = std::move(checkpoint);
      break;
    }
  }

  result.iterations = static_cast<int>(state.trace.size());
  result.trace = std::move(state.trace);
  result.best = std::move(state.best);
  result.initial_candidate = state.initial_candidate;
  if (!result.best.empty()) result.initial_boundary = result.best.front().distance;
  result.queries = queries.counts();
  finalize(result, source, config);
}

int source_label(const PointCloud& source) {
  if (!source.label()) throw InvalidInput("attack: source cloud has no ground-truth label");
  return *source.label();
}

AttackCheckpoint fresh_checkpoint(const Points& source, const Points& boundary, const AttackConfig& config) {
  AttackCheckpoint state;
  state.boundary = boundary;
  state.best.push_back({0, boundary, combined_distance(source, boundary, config.gamma1, config.gamma2)});
  Rng walk_rng(mix_seed(config.seed, 2));
  state.rng_state = save_engine(walk_rng);
  return state;
}

}  // namespace

std::size_t AttackConfig::normal_samples(int round) const {
  return static_cast<std::size_t>(std::ceil(normal_samples_base * std::sqrt(static_cast<double>(round))));
}

void AttackConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string("AttackConfig: ") + name + " must be positive");
  };
  positive(epsilon, "epsilon");
  positive(normal_samples_base, "normal_samples_base");
  positive(beta_tolerance, "beta_tolerance");
  positive(angle_tolerance, "angle_tolerance");
  positive(probe_scale, "probe_scale");
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw InvalidInput("AttackConfig: gammas must be non-negative");
  if (!(stall_tolerance >= 0.0)) throw InvalidInput("AttackConfig: stall_tolerance must be non-negative");
  if (k == 0) throw InvalidInput("AttackConfig: k must be positive");
  if (!(min_progress >= 0.0 && min_progress < 1.0)) throw InvalidInput("AttackConfig: min_progress must be in [0, 1)");
  if (rounds < 0 || max_q < 0 || max_direction_steps < 0 || patience < 0 || convergence_window < 0) {
    throw InvalidInput("AttackConfig: counts must be non-negative");
  }
  if (query_cap == 0) throw InvalidInput("AttackConfig: query_cap must be positive");
}

QueryContext::QueryContext(const HardLabelOracle& oracle, int ground_truth, std::uint64_t cap)
    : oracle_(&oracle), ground_truth_(ground_truth), cap_(cap) {}

QueryCounts QueryContext::counts() const {
  QueryCounts out = counter_.snapshot();
  for (std::size_t i = 0; i < kPhaseCount; ++i) out.by_phase[i] += prior_.by_phase[i];
  return out;
}

void QueryContext::add_prior(const QueryCounts& prior) {
  for (std::size_t i = 0; i < kPhaseCount; ++i) prior_.by_phase[i] += prior.by_phase[i];
}

int QueryContext::phi(const Points& cloud, Phase phase, double semicircle_cos) {
  if (counts().total() >= cap_) {
    throw QueryBudgetExhausted("query cap of " + std::to_string(cap_) + " reached");
  }
  const int value = indicator(*oracle_, cloud, ground_truth_, counter_, phase);
  if (observer_) observer_(ProbeEvent{phase, iteration_, cloud, value, boundary_gap_, semicircle_cos});
  return value;
}

std::string_view domain_name(WalkDomain domain) {
  return domain == WalkDomain::coordinate ? "coordinate" : "spectral";
}

WalkFrame WalkFrame::coordinate() { return WalkFrame{}; }

WalkFrame WalkFrame::spectral(GraphBasis basis) {
  WalkFrame frame;
  frame.domain_ = WalkDomain::spectral;
  frame.basis_ = std::make_shared<const GraphBasis>(std::move(basis));
  return frame;
}

Points WalkFrame::to_domain(const Points& cloud) const {
  if (domain_ == WalkDomain::coordinate) return cloud;
  return gft(cloud, *basis_).coefficients;
}

Points WalkFrame::to_cloud(const Points& x) const {
  if (domain_ == WalkDomain::coordinate) return x;
  return igft(Spectrum{x, basis_->source_fingerprint}, *basis_);
}

Points normalized(const Points& x) {
  const double norm = x.norm();
  if (!(norm > kZeroDirection) || !std::isfinite(norm)) throw NumericalError("cannot normalize a zero direction");
  return x / norm;
}

double angle_between(const Points& a, const Points& b) {
  return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
}

std::size_t select_best_candidate(const Points& source, std::span<const Points> candidates, QueryContext& queries,
                                  const AttackConfig& config) {
  std::vector<std::pair<double, std::size_t>> admissible;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const DistanceReport report = combined_distance(source, candidates[i], config.gamma1, config.gamma2);
    if (report.max_pointwise <= config.epsilon) admissible.emplace_back(report.d_combined, i);
  }
  std::sort(admissible.begin(), admissible.end());
  for (const auto& [distance, index] : admissible) {
    if (queries.phi(candidates[index], Phase::generation) == 1) return index;
  }
  std::ostringstream msg;
  msg << "no admissible candidate among " << candidates.size() << " (" << admissible.size()
      << " within epsilon=" << config.epsilon << ", none misclassified); enlarge the target pool";
  throw GenerationFailure(msg.str());
}

Points binary_project(const Points& source, const Points& adversarial, QueryContext& queries, double tolerance,
                      bool verify_brackets) {
  if (source.rows() != adversarial.rows()) throw InvalidInput("binary_project: cloud size mismatch");
  if (!(tolerance > 0.0)) throw InvalidInput("binary_project: tolerance must be positive");
  if (verify_brackets && (queries.phi(adversarial, Phase::projection) != 1 ||
                          queries.phi(source, Phase::projection) != -1)) {
    throw ContractError("binary_project: endpoints are not on opposite sides of the boundary");
  }
  double lo = 0.0;  // adversarial side
  double hi = 1.0;  // source side
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const Points probe = mid * source + (1.0 - mid) * adversarial;
    if (queries.phi(probe, Phase::projection) == 1) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (lo == 0.0) return adversarial;
  return lo * source + (1.0 - lo) * adversarial;
}

Points estimate_normal(const Points& boundary, QueryContext& queries, std::size_t samples, double probe_radius,
                       Rng& rng, const WalkFrame& frame) {
  if (samples == 0) throw InvalidInput("estimate_normal: need at least one sample");
  if (!(probe_radius > 0.0)) throw InvalidInput("estimate_normal: probe radius must be positive");
  const auto n = static_cast<std::size_t>(boundary.rows());
  const double scale = probe_radius / std::sqrt(3.0 * static_cast<double>(n));
  for (int attempt = 0; attempt < 2; ++attempt) {
    Points sum = Points::Zero(boundary.rows(), 3);
    for (std::size_t i = 0; i < samples; ++i) {
      const Points v = scale * rng.normal_points(n);
      const int phi = queries.phi(boundary + frame.to_cloud(v), Phase::normal_estimation);
      sum += static_cast<double>(phi) * v;
    }
    const double norm = sum.norm();
    if (norm > kZeroDirection) return sum / norm;
  }
  throw NumericalError("estimate_normal: probe directions cancelled twice");
}

Points point_on_semicircle(const Points& source, const Points& boundary, const Points& xi, const Points& u) {
  if (source.rows() != boundary.rows() || xi.rows() != source.rows() || u.rows() != source.rows()) {
    throw InvalidInput("point_on_semicircle: size mismatch");
  }
  const Points out = semicircle_in_domain(source, d_norm(source, boundary), xi, u);
  require_finite(out, "point_on_semicircle");
  return out;
}

SearchStart initial_search_direction(const Points& source, const Points& boundary, const Points& u, const Points& m,
                                     QueryContext& queries, int max_q, const WalkFrame& frame) {
  const double radius = (boundary - source).norm();
  SearchStart last;
  bool have_adversarial = false;
  for (int q = 0; q <= max_q; ++q) {
    const Points direction = std::ldexp(1.0, -q) * u + m;
    if (direction.norm() <= kZeroDirection) continue;
    Points xi = direction / direction.norm();
    const double cos = std::abs(frobenius_dot(xi, u));
    Points probe = frame.to_cloud(semicircle_in_domain(source, radius, xi, u));
    const int phi = queries.phi(probe, Phase::semicircle_search, cos);
    if (phi == -1) return SearchStart{std::move(xi), std::move(probe), q, false};
    last = SearchStart{std::move(xi), std::move(probe), q, true};
    have_adversarial = true;
  }
  if (!have_adversarial) {
    // Every direction degenerated (m == -u): stay at the boundary cloud.
    last = SearchStart{u, frame.to_cloud(boundary), max_q, true};
  }
  return last;
}

DirectionBisection bisect_direction(const Points& source, const Points& boundary, const Points& u, Points xi_lower,
                                    Points xi_upper, const Points& upper_cloud, QueryContext& queries,
                                    double tolerance, int max_steps, const WalkFrame& frame, bool verify_brackets) {
  const double radius = (boundary - source).norm();
  auto probe_at = [&](const Points& xi) { return frame.to_cloud(semicircle_in_domain(source, radius, xi, u)); };
  if (verify_brackets) {
    const int lower_phi = queries.phi(probe_at(xi_lower), Phase::semicircle_search, std::abs(frobenius_dot(xi_lower, u)));
    const int upper_phi = queries.phi(probe_at(xi_upper), Phase::semicircle_search, std::abs(frobenius_dot(xi_upper, u)));
    if (lower_phi == upper_phi) {
      throw ContractError("bisect_direction: both bracket directions answered phi=" + std::to_string(lower_phi));
    }
  }
  DirectionBisection out{std::move(xi_upper), upper_cloud, 0};
  while (out.steps < max_steps && angle_between(xi_lower, out.xi) > tolerance) {
    Points mid = normalized(xi_lower + out.xi);
    Points probe = probe_at(mid);
    ++out.steps;
    if (queries.phi(probe, Phase::semicircle_search, std::abs(frobenius_dot(mid, u))) == 1) {
      out.xi = std::move(mid);
      out.cloud = std::move(probe);
    } else {
      xi_lower = std::move(mid);
    }
  }
  return out;
}

std::string_view status_name(AttackStatus status) {
  switch (status) {
    case AttackStatus::completed: return "completed";
    case AttackStatus::query_cap: return "query_cap";
    case AttackStatus::already_adversarial: return "already_adversarial";
    case AttackStatus::generation_failed: return "generation_failed";
    case AttackStatus::aborted: return "aborted";
  }
  return "unknown";
}

AttackResult run_attack(const PointCloud& source_cloud, std::span<const Points> targets,
                        const HardLabelOracle& oracle, const WeightBank* bank, const AttackConfig& config,
                        const ProbeObserver& observer) {
  config.validate();
  const int label = source_label(source_cloud);
  const Points& source = source_cloud.points();
  const auto n = static_cast<std::size_t>(source.rows());
  require_min_points(source, config.k + 1, "run_attack");
  if (targets.empty()) throw InvalidInput("run_attack: empty target pool");
  if (bank != nullptr && !bank->contains(label)) bank->entries(label);  // throws with the available classes

  AttackResult result;
  result.seed = config.seed;
  result.ground_truth = label;
  QueryContext queries(oracle, label, config.query_cap);
  if (observer) queries.set_observer(observer);

  AttackCheckpoint state;
  try {
    if (queries.phi(source, Phase::generation) == 1) {
      result.status = AttackStatus::already_adversarial;
      result.message = "source is already misclassified";
      result.queries = queries.counts();
      return result;
    }
    Rng rng(mix_seed(config.seed, 1));
    const BandSplit split = config.band_cutoff > 0 ? BandSplit(config.band_cutoff) : BandSplit::default_for(n);
    split.check(n);
    const GraphBasis source_basis = build_basis(source, config.k);
    std::vector<Points> candidates;
    candidates.reserve(targets.size());
    for (const Points& target : targets) {
      const Points resampled = resample_to(target, n, rng);
      const FusionWeights weights = bank != nullptr ? sample_weights(*bank, label, rng) : FusionWeights{};
      const FusionPair pair(source, source_basis, resampled, build_basis(resampled, config.k), split);
      candidates.push_back(pair.fuse(weights));
    }
    const std::size_t chosen = select_best_candidate(source, candidates, queries, config);
    result.selected_target = chosen;
    const Points boundary =
        binary_project(source, candidates[chosen], queries, config.beta_tolerance, config.verify_brackets);
    state = fresh_checkpoint(source, boundary, config);
    state.initial_candidate = combined_distance(source, candidates[chosen], config.gamma1, config.gamma2);
    state.queries = queries.counts();
  } catch (const GenerationFailure& e) {
    result.status = AttackStatus::generation_failed;
    result.message = e.what();
    result.queries = queries.counts();
    return result;
  } catch (const QueryBudgetExhausted& e) {
    result.status = AttackStatus::query_cap;
    result.message = e.what();
    result.queries = queries.counts();
    return result;
  } catch (const TransportError& e) {
    result.status = AttackStatus::aborted;
    result.message = e.what();
    result.queries = queries.counts();
    return result;
  } catch (const ProtocolError& e) {
    result.status = AttackStatus::aborted;
    result.message = e.what();
    result.queries = queries.counts();
    return result;
  }
  walk(source, std::move(state), queries, config, result);
  return result;
}

AttackResult walk_boundary(const PointCloud& source_cloud, const Points& boundary, const HardLabelOracle& oracle,
                           const AttackConfig& config, const ProbeObserver& observer) {
  config.validate();
  const int label = source_label(source_cloud);
  const Points& source = source_cloud.points();
  if (boundary.rows() != source.rows()) throw InvalidInput("walk_boundary: cloud size mismatch");
  AttackResult result;
  result.seed = config.seed;
  result.ground_truth = label;
  QueryContext queries(oracle, label, config.query_cap);
  if (observer) queries.set_observer(observer);
  AttackCheckpoint state = fresh_checkpoint(source, boundary, config);
  state.initial_candidate = state.best.front().distance;
  walk(source, std::move(state), queries, config, result);
  return result;
}

AttackResult resume_attack(const PointCloud& source_cloud, const AttackCheckpoint& checkpoint,
                           const HardLabelOracle& oracle, const AttackConfig& config, const ProbeObserver& observer) {
  config.validate();
  const int label = source_label(source_cloud);
  if (checkpoint.boundary.rows() != source_cloud.points().rows()) {
    throw InvalidInput("resume_attack: checkpoint does not match the source cloud");
  }
  AttackResult result;
  result.seed = config.seed;
  result.ground_truth = label;
  QueryContext queries(oracle, label, config.query_cap);
  queries.add_prior(checkpoint.queries);
  if (observer) queries.set_observer(observer);
  walk(source_cloud.points(), checkpoint, queries, config, result);
  return result;
}

}  // namespace geowalk
