#pragma once

#include <cstdint>
#include <functional>

#include "uap/dataset.hpp"
#include "uap/ledger.hpp"
#include "uap/loss.hpp"
#include "uap/oracle.hpp"
#include "uap/report.hpp"
#include "uap/tensor.hpp"

namespace uap {

struct YoqoProgress {
  int generation = 0;                 // 1-based count of completed generations
  std::uint64_t images_consumed = 0;
  double generation_best_loss = 0.0;
  double step_size = 0.0;
  const PerturbationTile& best_tile_so_far;
};

// One-query-per-image universal attack: CMA-ES over perturbation tiles, each
// population member scored on a fresh batch of never-queried images.
struct YoqoConfig {
  int tile_side = 7;
  int population_size = 150;
  int batch_size = 1;
  int max_generations = 0;
  double epsilon = 0.0;
  double initial_step = -1.0;  // <= 0 -> 0.6 * epsilon
  AttackObjective objective;
  std::uint64_t seed = 1;
  // False (default) returns the best tile over the whole run; true restores
  // the literal last-generation-only pick.
  bool fidelity_pick = false;
  std::function<void(const YoqoProgress&)> on_generation;
};

struct AttackOutcome {
  UniversalPerturbation perturbation;
  AttackReport report;
  QueryLedger ledger;
};

// Mean attack objective of one tile over a batch; the attacker maximizes
// this. Registers one ledger entry per image (q = 1).
double fitness_of_tile(const PerturbationTile& tile, std::span<const StreamItem> batch,
                       const TensorShape& image_shape, ClassifierOracle& oracle,
                       const AttackObjective& objective, QueryLedger& ledger);

AttackOutcome run_yoqo(ClassifierOracle& oracle, DatasetStream& dataset,
                       const YoqoConfig& config);

}  // namespace uap
