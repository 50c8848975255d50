// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "geowalk/attack.hpp"
#include "geowalk/dataset.hpp"
#include "geowalk/defense.hpp"

namespace geowalk {

/// One attacked instance, as written to the JSON-lines results file.
struct InstanceRecord {
  std::size_t instance = 0;
  std::string name;
  int label = -1;
  std::string status;
  bool success = false;
  DistanceReport distance;
  DistanceReport initial_candidate;
  QueryCounts queries;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string message;

  bool operator==(const InstanceRecord&) const = default;
};

std::string to_json_line(const InstanceRecord& record);
InstanceRecord record_from_json(const std::string& line);
void write_jsonl(std::ostream& out, std::span<const InstanceRecord> records);
std::vector<InstanceRecord> read_jsonl(std::istream& in);

/// One table row. ASR and mean queries are over attempted instances; the
/// distance means are over successful ones.
struct EvaluationRow {
  std::string victim;
  std::string defense;
  std::size_t attempted = 0;
  std::size_t successes = 0;
  double asr = 0.0;  // percent
  double mean_d_hausdorff = 0.0;
  double mean_d_chamfer = 0.0;
  double mean_d_norm = 0.0;
  double mean_initial_d_norm = 0.0;
  double mean_queries = 0.0;
  double mean_wall_seconds = 0.0;
};

EvaluationRow aggregate(std::span<const InstanceRecord> records, std::string victim, std::string defense,
                        std::span<const double> wall_seconds = {});
std::string render_table(std::span<const EvaluationRow> rows);

struct EvaluationOptions {
  AttackConfig attack;
  DefenseKind defense = DefenseKind::none;
  DefenseConfig defense_config;
  /// Apply the defense once to the final cloud instead of to every query.
  bool post_hoc_defense = false;
  std::size_t workers = 1;
  /// A generation failure is retried with the target pool doubled, up to this
  /// many targets; 0 allows every training cloud of the other classes.
  std::size_t max_target_pool = 0;
  /// 0 attacks every eligible test instance.
  std::size_t max_instances = 0;
  std::string victim = "native";
  /// When set, the final cloud of every successful instance is written here as PLY.
  std::filesystem::path export_dir;
};

struct EvaluationReport {
  std::vector<InstanceRecord> records;
  std::vector<AttackResult> results;
  /// Per-record wall time; kept out of the records so they stay reproducible.
  std::vector<double> wall_seconds;
  EvaluationRow row;
};

/// Attacks every test cloud the (defended) oracle classifies correctly, with
/// targets drawn from training clouds of other classes. Queries spent on
/// failed generation attempts are charged to the instance. Instance i uses seed
/// mix_seed(attack.seed, i), so results do not depend on the worker count.
EvaluationReport evaluate(const Dataset& dataset, const HardLabelOracle& oracle, const WeightBank* bank,
                          const EvaluationOptions& options);

/// Wall-time sidecar: one "instance seconds" pair per line.
void write_timings(std::ostream& out, std::span<const InstanceRecord> records, std::span<const double> wall_seconds);

}  // namespace geowalk
