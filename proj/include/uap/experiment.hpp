#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "uap/evaluate.hpp"
#include "uap/report.hpp"

namespace uap {

// Flat key-value experiment description (mirrors the attack CLI flags and the
// usual hyperparameter-table names). Unknown keys are rejected.
struct ExperimentConfig {
  std::string algorithm;  // "yoqo" | "yoqt"
  int tile_size = 7;
  int population = 150;      // yoqo
  int batch = 1;             // B
  int directions = 1;        // J (yoqt)
  int iterations = 0;        // T (generations / PGD steps)
  double epsilon = 0.3;
  double sigma0 = -1.0;      // <= 0 -> 0.6 * epsilon
  double mu = 5e-4;
  double eta = 1.0;
  std::string basis = "fft";  // fft | canonical | random
  int target_class = -1;      // >= 0 switches to the targeted objective
  std::uint64_t seed = 1;
  int repetitions = 5;
  double holdout_fraction = 1.0 / 6.0;
  std::uint64_t holdout_seed = 97;
  bool fidelity_pick = false;
  std::filesystem::path dataset;
  std::filesystem::path labels;  // optional for targeted runs
  std::filesystem::path oracle;
  std::filesystem::path out;
};

std::map<std::string, std::string> parse_key_value_file(const std::filesystem::path& path);
ExperimentConfig config_from_keys(const std::map<std::string, std::string>& kv);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// FNV-1a over the canonical key=value serialization of the effective config.
std::uint64_t config_hash(const ExperimentConfig& config);

struct RunRecord {
  int run_index = 0;
  std::uint64_t seed = 0;
  AttackReport report;
  EvaluationResult evaluation;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<double> success_rates;  // per run, in run order
  double median_success_rate = 0.0;
  double holdout_accuracy = 0.0;  // clean oracle accuracy on the holdout ids
};

// Runs `repetitions` seeded attacks (seed + run_index), evaluates each on the
// seed-fixed holdout split, and writes per-run artifacts plus a summary under
// config.out. Result records are deterministic; wall-clock timings go to a
// separate volatile file so reruns compare byte-identical.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

double median_of(std::vector<double> values);

}  // namespace uap
