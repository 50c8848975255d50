// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "geowalk/cloud_io.hpp"
#include "geowalk/error.hpp"

namespace geowalk {
namespace {

using Json = nlohmann::ordered_json;

Json distance_json(const DistanceReport& d) {
  return Json{{"d_hausdorff", d.d_hausdorff}, {"d_chamfer", d.d_chamfer},         {"d_norm", d.d_norm},
              {"d_combined", d.d_combined},   {"max_pointwise", d.max_pointwise}};
}

DistanceReport distance_from(const nlohmann::json& j) {
  DistanceReport d;
  d.d_hausdorff = j.at("d_hausdorff").get<double>();
  d.d_chamfer = j.at("d_chamfer").get<double>();
  d.d_norm = j.at("d_norm").get<double>();
  d.d_combined = j.at("d_combined").get<double>();
  d.max_pointwise = j.at("max_pointwise").get<double>();
  return d;
}

std::vector<Points> pick_targets(const Dataset& dataset, int label, std::size_t pool, Rng& rng) {
  std::vector<Points> others = dataset.train_excluding(label);
  if (others.empty()) throw InvalidInput("evaluate: no training clouds of other classes to use as targets");
  std::vector<Points> out;
  std::sample(others.begin(), others.end(), std::back_inserter(out), std::min(pool, others.size()), rng.engine());
  return out;
}

InstanceRecord make_record(std::size_t instance, const PointCloud& cloud, const AttackResult& result) {
  InstanceRecord r;
  r.instance = instance;
  r.name = cloud.name();
  r.label = result.ground_truth;
  r.status = std::string(status_name(result.status));
  r.success = result.success;
  r.distance = result.distance;
  r.initial_candidate = result.initial_candidate;
  r.queries = result.queries;
  r.iterations = result.iterations;
  r.seed = result.seed;
  r.message = result.message;
  return r;
}

std::string fixed(double v, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, v);
  return buffer;
}

}  // namespace

std::string to_json_line(const InstanceRecord& record) {
  Json j;
  j["instance"] = record.instance;
  j["name"] = record.name;
  j["label"] = record.label;
  j["status"] = record.status;
  j["success"] = record.success;
  j["metrics"] = distance_json(record.distance);
  j["initial_candidate"] = distance_json(record.initial_candidate);
  Json q;
  q["total"] = record.queries.total();
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    q[std::string(phase_name(static_cast<Phase>(p)))] = record.queries.by_phase[p];
  }
  j["queries"] = q;
  j["iterations"] = record.iterations;
  j["seed"] = record.seed;
  if (!record.message.empty()) j["message"] = record.message;
  return j.dump();
}

InstanceRecord record_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    InstanceRecord r;
    r.instance = j.at("instance").get<std::size_t>();
    r.name = j.at("name").get<std::string>();
    r.label = j.at("label").get<int>();
    r.status = j.at("status").get<std::string>();
    r.success = j.at("success").get<bool>();
    r.distance = distance_from(j.at("metrics"));
    r.initial_candidate = distance_from(j.at("initial_candidate"));
    for (std::size_t p = 0; p < kPhaseCount; ++p) {
      r.queries.by_phase[p] = j.at("queries").at(std::string(phase_name(static_cast<Phase>(p)))).get<std::uint64_t>();
    }
    r.iterations = j.at("iterations").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.message = j.value("message", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed result record: ") + e.what());
  }
}

void write_jsonl(std::ostream& out, std::span<const InstanceRecord> records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<InstanceRecord> read_jsonl(std::istream& in) {
  std::vector<InstanceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(record_from_json(line));
  }
  return out;
}

EvaluationRow aggregate(std::span<const InstanceRecord> records, std::string victim, std::string defense,
                        std::span<const double> wall_seconds) {
  EvaluationRow row;
  row.victim = std::move(victim);
  row.defense = std::move(defense);
  row.attempted = records.size();
  double queries = 0.0;
  for (const auto& r : records) {
    queries += static_cast<double>(r.queries.total());
    if (!r.success) continue;
    ++row.successes;
    row.mean_d_hausdorff += r.distance.d_hausdorff;
    row.mean_d_chamfer += r.distance.d_chamfer;
    row.mean_d_norm += r.distance.d_norm;
    row.mean_initial_d_norm += r.initial_candidate.d_norm;
  }
  if (row.attempted > 0) {
    row.asr = 100.0 * static_cast<double>(row.successes) / static_cast<double>(row.attempted);
    row.mean_queries = queries / static_cast<double>(row.attempted);
  }
  if (row.successes > 0) {
    const auto s = static_cast<double>(row.successes);
    row.mean_d_hausdorff /= s;
    row.mean_d_chamfer /= s;
    row.mean_d_norm /= s;
    row.mean_initial_d_norm /= s;
  }
  if (!wall_seconds.empty()) {
    row.mean_wall_seconds =
        std::accumulate(wall_seconds.begin(), wall_seconds.end(), 0.0) / static_cast<double>(wall_seconds.size());
  }
  return row;
}

std::string render_table(std::span<const EvaluationRow> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-8s %5s %7s %10s %10s %9s %9s %9s\n", "victim", "defense", "n", "ASR%",
                "D_h", "D_c", "D_norm", "queries", "time_s");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %-8s %5zu %7s %10s %10s %9s %9s %9s\n", r.victim.c_str(),
                  r.defense.c_str(), r.attempted, fixed(r.asr, 1).c_str(), fixed(r.mean_d_hausdorff, 6).c_str(),
                  fixed(r.mean_d_chamfer, 6).c_str(), fixed(r.mean_d_norm, 4).c_str(),
                  fixed(r.mean_queries, 1).c_str(), fixed(r.mean_wall_seconds, 2).c_str());
    out << line;
  }
  return out.str();
}

EvaluationReport evaluate(const Dataset& dataset, const HardLabelOracle& oracle, const WeightBank* bank,
                          const EvaluationOptions& options) {
  options.attack.validate();
  const DefendedOracle defended(oracle, options.post_hoc_defense ? DefenseKind::none : options.defense,
                                options.defense_config, options.attack.seed);
  const DefendedOracle post_hoc(oracle, options.post_hoc_defense ? options.defense : DefenseKind::none,
                                options.defense_config, options.attack.seed);

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dataset.test.size(); ++i) {
    const auto& cloud = dataset.test[i];
    if (cloud.label() && defended.predict(cloud.points()) == *cloud.label()) eligible.push_back(i);
  }
  if (eligible.empty()) throw InvalidInput("no correctly classified instances");
  if (options.max_instances > 0 && eligible.size() > options.max_instances) eligible.resize(options.max_instances);

  const std::size_t count = eligible.size();
  EvaluationReport report;
  report.records.resize(count);
  report.results.resize(count);
  report.wall_seconds.resize(count);
  if (!options.export_dir.empty()) std::filesystem::create_directories(options.export_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t slot = next.fetch_add(1); slot < count; slot = next.fetch_add(1)) {
      const std::size_t instance = eligible[slot];
      const PointCloud& cloud = dataset.test[instance];
      const auto start = std::chrono::steady_clock::now();
      AttackConfig config = options.attack;
      config.seed = mix_seed(options.attack.seed, instance);
      AttackResult result;
      try {
        const std::size_t available = dataset.train_excluding(*cloud.label()).size();
        const std::size_t max_pool =
            options.max_target_pool == 0 ? available : std::min(options.max_target_pool, available);
        QueryCounts spent;
        for (std::size_t pool = std::min(config.target_pool, max_pool);; pool = std::min(2 * pool, max_pool)) {
          Rng target_rng(mix_seed(config.seed, 3));
          const auto targets = pick_targets(dataset, *cloud.label(), pool, target_rng);
          result = run_attack(cloud, targets, defended, bank, config);
          for (std::size_t p = 0; p < kPhaseCount; ++p) spent.by_phase[p] += result.queries.by_phase[p];
          if (result.status != AttackStatus::generation_failed || pool >= max_pool) break;
        }
        result.queries = spent;
        if (options.post_hoc_defense && result.success) {
          result.success = post_hoc.predict(result.adversarial) != *cloud.label();
        }
      } catch (const Error& e) {
        result = AttackResult{};
        result.status = AttackStatus::aborted;
        result.ground_truth = *cloud.label();
        result.seed = config.seed;
        result.message = e.what();
      }
      if (!options.export_dir.empty() && result.success) {
        write_ply(options.export_dir / (std::to_string(instance) + ".ply"), result.adversarial);
      }
      report.records[slot] = make_record(instance, cloud, result);
      report.results[slot] = std::move(result);
      report.wall_seconds[slot] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  report.row = aggregate(report.records, options.victim, std::string(defense_name(options.defense)),
                         report.wall_seconds);
  return report;
}

void write_timings(std::ostream& out, std::span<const InstanceRecord> records, std::span<const double> wall_seconds) {
  if (records.size() != wall_seconds.size()) throw InvalidInput("write_timings: size mismatch");
  for (std::size_t i = 0; i < records.size(); ++i) out << records[i].instance << ' ' << wall_seconds[i] << '\n';
}

}  // namespace geowalk
