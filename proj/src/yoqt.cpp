#include "uap/yoqt.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "uap/errors.hpp"
#include "uap/fd_estimator.hpp"
#include "uap/loss.hpp"

namespace uap {

PerturbationTile sign_step(const PerturbationTile& delta, const Eigen::VectorXd& g_avg,
                           double eta, double epsilon) {
  if (g_avg.size() != static_cast<Eigen::Index>(delta.size())) {
    throw ShapeError("sign_step: gradient dimension does not match tile");
  }
  PerturbationTile out = delta;
  out.epsilon = epsilon;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const double g = g_avg[static_cast<Eigen::Index>(k)];
    const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
    out.values[k] += eta * s;
  }
  project_linf_inplace(out.values, epsilon);
  return out;
}

AttackOutcome run_yoqt(ClassifierOracle& oracle, DatasetStream& dataset,
                       const YoqtConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const TensorShape shape = dataset.shape();
  if (config.tile_side < 1 || config.tile_side > std::min(shape.height, shape.width)) {
    throw std::invalid_argument("run_yoqt: tile_side must lie in [1, min(H, W)]");
  }
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("run_yoqt: epsilon must be > 0");
  if (!(config.smoothing > 0.0)) throw std::invalid_argument("run_yoqt: smoothing must be > 0");
  if (!(config.step_size > 0.0)) throw std::invalid_argument("run_yoqt: step_size must be > 0");
  if (config.batch_size < 1) throw std::invalid_argument("run_yoqt: batch_size must be >= 1");
  if (config.directions_per_step < 1) {
    throw std::invalid_argument("run_yoqt: directions_per_step must be >= 1");
  }
  if (config.max_iterations < 1) {
    throw std::invalid_argument("run_yoqt: max_iterations must be >= 1");
  }
  if (oracle.input_size() != static_cast<int>(shape.size())) {
    throw ShapeError("run_yoqt: oracle input size does not match dataset images");
  }
  if (config.objective.mode == AttackMode::Untargeted && !dataset.source().labeled()) {
    throw std::invalid_argument("untargeted attack requires a labeled dataset");
  }
  if (config.objective.mode == AttackMode::Targeted &&
      (config.objective.target_class < 0 ||
       config.objective.target_class >= oracle.class_count())) {
    throw std::invalid_argument("run_yoqt: target_class outside the oracle's classes");
  }
  const std::size_t per_iteration =
      static_cast<std::size_t>(config.directions_per_step) * config.batch_size;
  if (dataset.remaining() < per_iteration) {
    throw std::invalid_argument("run_yoqt: dataset supplies " +
                                std::to_string(dataset.remaining()) + " images but one " +
                                "iteration needs " + std::to_string(per_iteration));
  }

  FdConfig fd{config.smoothing, config.directions_per_step, config.batch_size,
              DirectionBasis(config.basis, config.tile_side, shape.channels,
                             config.basis_seed)};
  QueryLedger ledger(2, config.epsilon);

  // The loss wrapper pairs the oracle with the attack objective and folds
  // per-query losses into the iteration trace.
  double loss_accum = 0.0;
  std::uint64_t loss_count = 0;
  const AttackObjective objective = config.objective;
  const QueryLossFn query_loss = [&](std::span<const double> point, int label) {
    const Logits logits = oracle.query(point);
    const double value = objective.mode == AttackMode::Untargeted
                             ? cross_entropy(logits, label)
                             : targeted_loss(logits, objective.target_class);
    loss_accum += value;
    ++loss_count;
    return value;
  };

  // The working tile radius sits a hair inside epsilon so that forming
  // clip(x + delta) in floating point can never exit the epsilon-ball; the
  // smoothing probes and the sign steps all project onto this radius.
  const double eps_work = attack_safe_epsilon(config.epsilon);
  PerturbationTile delta = make_tile(config.tile_side, shape.channels, eps_work);
  Eigen::VectorXd g_avg = Eigen::VectorXd::Zero(fd.basis.dimension());
  std::vector<LossTracePoint> trace;
  int iterations = 0;
  while (iterations < config.max_iterations && dataset.remaining() >= per_iteration) {
    loss_accum = 0.0;
    loss_count = 0;
    const Eigen::VectorXd g_hat =
        averaged_gradient(query_loss, dataset, delta, fd, iterations, ledger);
    g_avg = 0.5 * (g_avg + g_hat);
    delta = sign_step(delta, g_avg, config.step_size, eps_work);
    ++iterations;
    const double mean_loss = loss_accum / static_cast<double>(loss_count);
    trace.push_back({iterations - 1, ledger.distinct_images(), mean_loss});
    if (config.on_iteration) {
      config.on_iteration({iterations, ledger.distinct_images(), mean_loss, delta});
    }
  }

  AttackOutcome outcome{tile_expand(delta, shape.height, shape.width), AttackReport{},
                        std::move(ledger)};
  outcome.report.algorithm = "yoqt";
  outcome.report.config = {
      {"algorithm", "yoqt"},
      {"tile_side", std::to_string(config.tile_side)},
      {"batch", std::to_string(config.batch_size)},
      {"directions", std::to_string(config.directions_per_step)},
      {"iterations", std::to_string(config.max_iterations)},
      {"mu", format_double(config.smoothing)},
      {"eta", format_double(config.step_size)},
      {"epsilon", format_double(config.epsilon)},
      {"basis", config.basis == BasisKind::FftLowFrequency
                    ? "fft"
                    : (config.basis == BasisKind::Canonical ? "canonical" : "random")},
      {"objective", objective.mode == AttackMode::Untargeted ? "untargeted" : "targeted"},
      {"target_class", std::to_string(objective.target_class)},
      {"seed", std::to_string(config.seed)},
  };
  outcome.report.images_consumed = outcome.ledger.distinct_images();
  outcome.report.total_queries = outcome.ledger.total_queries();
  outcome.report.loss_trace = std::move(trace);
  outcome.report.audit = audit_ledger(outcome.ledger);
  outcome.report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return outcome;
}

}  // namespace uap
