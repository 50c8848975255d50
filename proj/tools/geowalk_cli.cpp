// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geowalk/attack.hpp"
#include "geowalk/cloud_io.hpp"
#include "geowalk/dataset.hpp"
#include "geowalk/defense.hpp"
#include "geowalk/error.hpp"
#include "geowalk/evaluate.hpp"
#include "geowalk/native_classifier.hpp"
#include "geowalk/remote_oracle.hpp"
#include "geowalk/training.hpp"

namespace fs = std::filesystem;
using namespace geowalk;

namespace {

// Lines of "key = value"; '#' starts a comment. Keys use the long flag names,
// with '_' accepted for '-'.
std::vector<std::string> config_arguments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  std::vector<std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    out.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return out;
}

// Inserts config-file values right after the verb so later flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::optional<fs::path> config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (!config || args.size() < 2) return args;
  auto extra = config_arguments(*config);
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

void add_attack_options(CLI::App* cmd, AttackConfig& c) {
  cmd->add_option("--gamma1", c.gamma1, "Chamfer weight in the combined distance");
  cmd->add_option("--gamma2", c.gamma2, "L2 weight in the combined distance");
  cmd->add_option("--epsilon", c.epsilon, "Outlier cap on candidate points");
  cmd->add_option("--k", c.k, "Neighbours in the graph");
  cmd->add_option("--rounds", c.rounds, "Walking rounds");
  cmd->add_option("--normal-samples-base", c.normal_samples_base, "Samples at round t: ceil(base * sqrt(t))");
  cmd->add_option("--band-cutoff", c.band_cutoff, "Low-band size, 0 for n/10");
  cmd->add_option("--beta-tolerance", c.beta_tolerance, "Projection bisection tolerance");
  cmd->add_option("--angle-tolerance", c.angle_tolerance, "Direction bisection tolerance (radians)");
  cmd->add_option("--max-q", c.max_q, "Cap on the initial search halvings");
  cmd->add_option("--max-direction-steps", c.max_direction_steps, "Cap on direction bisection steps");
  cmd->add_option("--probe-scale", c.probe_scale, "Probe radius relative to the boundary gap");
  cmd->add_option("--stall-tolerance", c.stall_tolerance, "Relative gain below which the spectral step is tried");
  cmd->add_option("--patience", c.patience, "Stop after this many rejected rounds, 0 = off");
  cmd->add_option("--convergence-window", c.convergence_window, "Rounds over which progress is measured, 0 = off");
  cmd->add_option("--min-progress", c.min_progress, "Relative d_norm decrease required per window");
  cmd->add_option("--query-cap", c.query_cap, "Hard cap on oracle queries per attack");
  cmd->add_option("--target-pool", c.target_pool, "Targets drawn per attack");
  cmd->add_flag("--verify-brackets", c.verify_brackets, "Re-query bisection brackets");
}

struct VictimOptions {
  std::string victim = "native";
  fs::path classifier;
  std::string endpoint = "http://127.0.0.1:8000";
};

void add_victim_options(CLI::App* cmd, VictimOptions& v) {
  cmd->add_option("--victim", v.victim, "native or remote")->check(CLI::IsMember({"native", "remote"}));
  cmd->add_option("--classifier", v.classifier, "Native classifier JSON (default: <data>/classifier.json)");
  cmd->add_option("--endpoint", v.endpoint, "Victim bridge URL for --victim remote");
}

std::unique_ptr<HardLabelOracle> make_victim(const VictimOptions& v, const fs::path& data) {
  if (v.victim == "remote") {
    auto remote = std::make_unique<RemoteOracle>(RemoteEndpoint::parse(v.endpoint));
    std::cerr << "remote victim " << remote->endpoint().to_string() << " reports " << remote->health()
              << " classes\n";
    return remote;
  }
  const fs::path path = v.classifier.empty() ? data / "classifier.json" : v.classifier;
  return std::make_unique<NativeCentroidClassifier>(NativeCentroidClassifier::load(path));
}

std::optional<WeightBank> load_bank(const fs::path& path) {
  if (path.empty()) return std::nullopt;
  return WeightBank::load(path);
}

int run(int argc, char** argv) {
  CLI::App app("Hard-label black-box attacks on point clouds");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  fs::path config_file;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value defaults; flags override");
    cmd->add_option("--seed", seed, "Master seed");
  };

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset and fit the native classifier");
  common(gen);
  SyntheticDatasetSpec spec;
  fs::path gen_out;
  std::vector<std::string> gen_classes;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", gen_classes, "Shape classes (default: all)");
  gen->add_option("--points", spec.n_points, "Points per cloud");
  gen->add_option("--instances", spec.instances_per_class, "Instances per class");
  gen->add_option("--jitter", spec.jitter, "Gaussian jitter");
  gen->add_flag("--rotate", spec.random_rotation, "Random rotation per instance");
  gen->add_option("--train-fraction", spec.train_fraction, "Training share of each class");

  // train-disc
  auto* disc = app.add_subcommand("train-disc", "Train a fusion discriminator");
  common(disc);
  BankTrainingConfig bank_config;
  fs::path data_dir;
  fs::path disc_out;
  int disc_class = 0;
  bool shared = false;
  disc->add_option("--data", data_dir, "Dataset directory")->required();
  disc->add_option("--class", disc_class, "Class id");
  disc->add_flag("--shared", shared, "One discriminator for all classes");
  disc->add_option("--out", disc_out, "Output tensor file")->required();
  disc->add_option("--epochs", bank_config.discriminator.epochs, "Training epochs");
  disc->add_option("--lr", bank_config.discriminator.learning_rate, "Learning rate");
  disc->add_option("--batch-size", bank_config.discriminator.batch_size, "Mini-batch size");
  disc->add_option("--negatives", bank_config.negatives_per_class, "Random-weight fusions per class");

  // learn-weights
  auto* learn = app.add_subcommand("learn-weights", "Learn per-class fusion weights into a bank");
  common(learn);
  fs::path bank_out;
  fs::path disc_in;
  std::vector<int> learn_classes;
  learn->add_option("--data", data_dir, "Dataset directory")->required();
  learn->add_option("--out", bank_out, "Output bank JSON")->required();
  learn->add_option("--classes", learn_classes, "Classes to learn (default: all)");
  learn->add_option("--disc", disc_in, "Pretrained discriminator; requires exactly one --classes entry");
  learn->add_option("--epochs", bank_config.weights.epochs, "Weight-learning epochs");
  learn->add_option("--lr", bank_config.weights.learning_rate, "Weight-learning rate");
  learn->add_option("--pairs", bank_config.weights.pairs, "Fusion pairs per class");
  learn->add_option("--batch-pairs", bank_config.weights.batch_pairs, "Pairs per step");
  learn->add_option("--entries", bank_config.entries_per_class, "Entries per class");
  learn->add_option("--disc-epochs", bank_config.discriminator.epochs, "Discriminator epochs");
  learn->add_option("--disc-lr", bank_config.discriminator.learning_rate, "Discriminator learning rate");
  learn->add_option("--negatives", bank_config.negatives_per_class, "Random-weight fusions per class");
  learn->add_flag("--shared-disc", bank_config.shared_discriminator, "One discriminator for all classes");

  // attack
  auto* attack = app.add_subcommand("attack", "Attack one test instance");
  common(attack);
  AttackConfig attack_config;
  VictimOptions victim;
  fs::path bank_in;
  std::size_t instance = 0;
  fs::path attack_out;
  fs::path ply_out;
  attack->add_option("--data", data_dir, "Dataset directory")->required();
  attack->add_option("--instance", instance, "Test-set index");
  attack->add_option("--bank", bank_in, "Weight bank (default: fixed 0.5/0.5 weights)");
  attack->add_option("--out", attack_out, "Append the JSON-lines record here (default: stdout)");
  attack->add_option("--ply", ply_out, "Write the adversarial cloud as PLY");
  add_victim_options(attack, victim);
  add_attack_options(attack, attack_config);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Attack every correctly classified test instance");
  common(eval);
  EvaluationOptions eval_options;
  std::string defense = "none";
  fs::path eval_out;
  fs::path timings_out;
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--bank", bank_in, "Weight bank (default: fixed 0.5/0.5 weights)");
  eval->add_option("--defense", defense, "none, sor, srs30 or srs50")
      ->check(CLI::IsMember({"none", "sor", "srs30", "srs50"}));
  eval->add_flag("--post-hoc", eval_options.post_hoc_defense, "Apply the defense once to the final cloud");
  eval->add_option("--sor-k", eval_options.defense_config.sor_k, "SOR neighbour count");
  eval->add_option("--sor-alpha", eval_options.defense_config.sor_alpha, "SOR stddev multiplier");
  eval->add_option("--workers", eval_options.workers, "Parallel attacks");
  eval->add_option("--max-instances", eval_options.max_instances, "Limit on attacked instances, 0 = all");
  eval->add_option("--max-target-pool", eval_options.max_target_pool, "Largest retry pool, 0 = all");
  eval->add_option("--out", eval_out, "JSON-lines results");
  eval->add_option("--timings", timings_out, "Per-instance wall time sidecar");
  eval->add_option("--export-dir", eval_options.export_dir, "PLY export directory");
  add_victim_options(eval, victim);
  add_attack_options(eval, attack_config);

  // export-ply
  auto* exp = app.add_subcommand("export-ply", "Convert a cloud or dataset instance to PLY");
  common(exp);
  fs::path cloud_in;
  fs::path exp_out;
  std::string split = "test";
  exp->add_option("--in", cloud_in, "Input .xyz or .ply");
  exp->add_option("--data", data_dir, "Dataset directory");
  exp->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  exp->add_option("--instance", instance, "Index within the split");
  exp->add_option("--out", exp_out, "Output PLY")->required();

  const auto args = expand_config(argc, argv);
  std::vector<const char*> raw;
  for (const auto& a : args) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), const_cast<char**>(raw.data()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (gen->parsed()) {
    spec.seed = seed;
    if (!gen_classes.empty()) {
      spec.classes.clear();
      for (const auto& name : gen_classes) spec.classes.push_back(parse_shape(name));
    }
    const Dataset dataset = generate_dataset(spec);
    save_dataset(dataset, gen_out);
    double train_accuracy = 0.0;
    const auto classifier = train_native_classifier(dataset.train, FeatureOptions{!spec.random_rotation},
                                                    &train_accuracy);
    classifier.save(gen_out / "classifier.json");
    std::cout << "wrote " << dataset.train.size() << " train and " << dataset.test.size() << " test clouds to "
              << gen_out.string() << "\n";
    std::cout << "native classifier: train accuracy " << train_accuracy << ", test accuracy "
              << classifier.accuracy(dataset.test) << "\n";
    return 0;
  }

  if (disc->parsed()) {
    bank_config.seed = seed;
    const Dataset dataset = load_dataset(data_dir);
    DiscriminatorTrainingLog log;
    const auto trained = train_class_discriminator(dataset, shared ? -1 : disc_class, bank_config, &log);
    trained.model.save(disc_out);
    std::cout << "final loss " << (log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()) << ", train accuracy "
              << trained.train_accuracy << ", held-out accuracy " << trained.heldout_accuracy << "\n";
    return 0;
  }

  if (learn->parsed()) {
    bank_config.seed = seed;
    const Dataset dataset = load_dataset(data_dir);
    WeightBank bank;
    if (!disc_in.empty()) {
      if (learn_classes.size() != 1) throw InvalidInput("--disc needs exactly one --classes entry");
      const int class_id = learn_classes.front();
      const Discriminator model = Discriminator::load(disc_in);
      bank.provenance = BankProvenance{bank_config.weights.epochs, bank_config.weights.learning_rate, seed,
                                       bank_config.weights.band_cutoff, false};
      const auto sources = dataset.train_of(class_id);
      const auto targets = dataset.train_excluding(class_id);
      for (std::size_t e = 0; e < bank_config.entries_per_class; ++e) {
        WeightLearningConfig weights = bank_config.weights;
        weights.seed = mix_seed(seed, 700 + e);
        bank.add(learn_fusion_weights(class_id, sources, targets, model, weights));
      }
    } else {
      std::map<int, ClassDiscriminator> discriminators;
      bank = build_weight_bank(dataset, bank_config, learn_classes, &discriminators);
      for (const auto& [id, d] : discriminators) {
        std::cout << "discriminator " << (id < 0 ? std::string("shared") : std::to_string(id))
                  << ": train accuracy " << d.train_accuracy << ", held-out accuracy " << d.heldout_accuracy
                  << "\n";
      }
    }
    bank.save(bank_out);
    for (const int c : bank.classes()) {
      for (const auto& w : bank.entries(c)) {
        std::cout << "class " << c << ": alpha_low " << w.alpha_low << ", alpha_high " << w.alpha_high << "\n";
      }
    }
    return 0;
  }

  if (attack->parsed()) {
    attack_config.seed = seed;
    attack_config.validate();
    const Dataset dataset = load_dataset(data_dir);
    if (instance >= dataset.test.size()) throw InvalidInput("--instance out of range");
    const auto oracle = make_victim(victim, data_dir);
    const auto bank = load_bank(bank_in);
    const PointCloud& source = dataset.test[instance];
    if (!source.label()) throw InvalidInput("test instance has no label");
    Rng target_rng(mix_seed(seed, 3));
    auto others = dataset.train_excluding(*source.label());
    std::vector<Points> targets;
    std::sample(others.begin(), others.end(), std::back_inserter(targets),
                std::min(attack_config.target_pool, others.size()), target_rng.engine());
    const AttackResult result = run_attack(source, targets, *oracle, bank ? &*bank : nullptr, attack_config);
    InstanceRecord record;
    record.instance = instance;
    record.name = source.name();
    record.label = result.ground_truth;
    record.status = std::string(status_name(result.status));
    record.success = result.success;
    record.distance = result.distance;
    record.initial_candidate = result.initial_candidate;
    record.queries = result.queries;
    record.iterations = result.iterations;
    record.seed = result.seed;
    record.message = result.message;
    if (attack_out.empty()) {
      std::cout << to_json_line(record) << "\n";
    } else {
      std::ofstream out(attack_out, std::ios::app);
      out << to_json_line(record) << "\n";
    }
    if (!ply_out.empty() && result.success) write_ply(ply_out, result.adversarial);
    std::cerr << record.name << ": " << record.status << ", d_norm " << record.distance.d_norm << ", "
              << record.queries.total() << " queries\n";
    return result.success ? 0 : 2;
  }

  if (eval->parsed()) {
    attack_config.seed = seed;
    eval_options.attack = attack_config;
    eval_options.defense = parse_defense(defense);
    eval_options.victim = victim.victim;
    const Dataset dataset = load_dataset(data_dir);
    const auto oracle = make_victim(victim, data_dir);
    const auto bank = load_bank(bank_in);
    const auto report = evaluate(dataset, *oracle, bank ? &*bank : nullptr, eval_options);
    if (!eval_out.empty()) {
      std::ofstream out(eval_out);
      write_jsonl(out, report.records);
    }
    if (!timings_out.empty()) {
      std::ofstream out(timings_out);
      write_timings(out, report.records, report.wall_seconds);
    }
    const std::vector<EvaluationRow> rows{report.row};
    std::cout << render_table(rows);
    return 0;
  }

  if (exp->parsed()) {
    Points points;
    if (!cloud_in.empty()) {
      points = read_cloud(cloud_in);
    } else if (!data_dir.empty()) {
      const Dataset dataset = load_dataset(data_dir);
      const auto& clouds = split == "train" ? dataset.train : dataset.test;
      if (instance >= clouds.size()) throw InvalidInput("--instance out of range");
      points = clouds[instance].points();
    } else {
      throw InvalidInput("export-ply needs --in or --data");
    }
    write_ply(exp_out, points);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
