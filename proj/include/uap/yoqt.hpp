#pragma once

#include <cstdint>
#include <functional>

#include "uap/basis.hpp"
#include "uap/yoqo.hpp"

namespace uap {

struct YoqtProgress {
  int iteration = 0;  // 1-based count of completed iterations
  std::uint64_t images_consumed = 0;
  double mean_query_loss = 0.0;
  const PerturbationTile& delta;
};

// Two-queries-per-image universal attack: momentum sign ascent on the
// finite-difference gradient estimate, every image queried exactly twice.
struct YoqtConfig {
  int tile_side = 7;
  int batch_size = 10;         // B
  int directions_per_step = 1; // J
  int max_iterations = 0;      // T
  double smoothing = 5e-4;     // mu
  double step_size = 1.0;      // eta
  double epsilon = 0.0;
  BasisKind basis = BasisKind::FftLowFrequency;
  std::uint64_t basis_seed = 0;  // used by the random basis only
  AttackObjective objective;
  std::uint64_t seed = 1;
  std::function<void(const YoqtProgress&)> on_iteration;
};

// project_linf(delta + eta * sign(g_avg), epsilon), with sign(0) = 0.
PerturbationTile sign_step(const PerturbationTile& delta, const Eigen::VectorXd& g_avg,
                           double eta, double epsilon);

AttackOutcome run_yoqt(ClassifierOracle& oracle, DatasetStream& dataset,
                       const YoqtConfig& config);

}  // namespace uap
