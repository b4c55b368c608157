#include "uap/yoqo.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

#include "uap/cma_es.hpp"
#include "uap/errors.hpp"

namespace uap {

namespace {

void validate_objective(const AttackObjective& objective, const ClassifierOracle& oracle,
                        const DatasetStream& dataset) {
  if (objective.mode == AttackMode::Untargeted) {
    if (!dataset.source().labeled()) {
      throw std::invalid_argument("untargeted attack requires a labeled dataset");
    }
  } else if (objective.target_class < 0 || objective.target_class >= oracle.class_count()) {
    throw std::invalid_argument("target_class " + std::to_string(objective.target_class) +
                                " outside [0, " + std::to_string(oracle.class_count()) + ")");
  }
}

}  // namespace

double fitness_of_tile(const PerturbationTile& tile, std::span<const StreamItem> batch,
                       const TensorShape& image_shape, ClassifierOracle& oracle,
                       const AttackObjective& objective, QueryLedger& ledger) {
  if (linf_norm(tile.values) > tile.epsilon) {
    throw std::invalid_argument("fitness_of_tile: tile violates its epsilon bound");
  }
  const UniversalPerturbation expanded =
      tile_expand(tile, image_shape.height, image_shape.width);
  std::vector<Logits> logits;
  std::vector<int> labels;
  logits.reserve(batch.size());
  labels.reserve(batch.size());
  for (const StreamItem& item : batch) {
    const std::vector<double> point = perturbed_query(item.pixels, image_shape, expanded);
    ledger.record_query(item.id, point, item.pixels);
    logits.push_back(oracle.query(point));
    labels.push_back(item.label);
  }
  return batch_loss(logits, labels, objective);
}

AttackOutcome run_yoqo(ClassifierOracle& oracle, DatasetStream& dataset,
                       const YoqoConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const TensorShape shape = dataset.shape();
  if (config.tile_side < 1 || config.tile_side > std::min(shape.height, shape.width)) {
    throw std::invalid_argument("run_yoqo: tile_side must lie in [1, min(H, W)]");
  }
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("run_yoqo: epsilon must be > 0");
  if (config.population_size < 2) {
    throw std::invalid_argument("run_yoqo: population_size must be >= 2");
  }
  if (config.batch_size < 1) throw std::invalid_argument("run_yoqo: batch_size must be >= 1");
  if (config.max_generations < 1) {
    throw std::invalid_argument("run_yoqo: max_generations must be >= 1");
  }
  if (oracle.input_size() != static_cast<int>(shape.size())) {
    throw ShapeError("run_yoqo: oracle input size does not match dataset images");
  }
  validate_objective(config.objective, oracle, dataset);
  const std::size_t per_generation =
      static_cast<std::size_t>(config.population_size) * config.batch_size;
  if (dataset.remaining() < per_generation) {
    throw std::invalid_argument("run_yoqo: dataset supplies " +
                                std::to_string(dataset.remaining()) + " images but one " +
                                "generation needs " + std::to_string(per_generation));
  }

  const int n = config.tile_side * config.tile_side * shape.channels;
  const CmaParams params = default_params(n, config.population_size);
  // Candidate tiles are clamped a hair inside epsilon so that forming
  // clip(x + delta) in floating point can never exit the epsilon-ball.
  const double eps_work = attack_safe_epsilon(config.epsilon);
  const double sigma0 =
      config.initial_step > 0.0 ? config.initial_step : 0.6 * config.epsilon;
  CmaState state = initial_state(params, Eigen::VectorXd::Zero(n), sigma0);
  std::mt19937_64 rng(config.seed);

  QueryLedger ledger(1, config.epsilon);
  PerturbationTile tile = make_tile(config.tile_side, shape.channels, config.epsilon);
  PerturbationTile best_tile = tile;       // global best-ever
  PerturbationTile last_gen_best = tile;   // literal per-generation pick
  double best_loss = -std::numeric_limits<double>::infinity();
  std::vector<LossTracePoint> trace;

  std::vector<double> losses(static_cast<std::size_t>(config.population_size));
  std::vector<int> order(static_cast<std::size_t>(config.population_size));
  int generations = 0;
  while (generations < config.max_generations && dataset.remaining() >= per_generation) {
    const auto samples = sample_population(state, params, eps_work, rng);
    double gen_best = -std::numeric_limits<double>::infinity();
    int gen_best_index = 0;
    for (int j = 0; j < config.population_size; ++j) {
      const auto& z = samples[static_cast<std::size_t>(j)];
      std::copy(z.data(), z.data() + n, tile.values.begin());
      const auto batch = dataset.draw(config.batch_size);
      const double loss =
          fitness_of_tile(tile, batch, shape, oracle, config.objective, ledger);
      losses[static_cast<std::size_t>(j)] = loss;
      if (loss > gen_best) {
        gen_best = loss;
        gen_best_index = j;
      }
    }

    // CMA-ES minimizes; rank by negated attacker loss, best first.
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return losses[static_cast<std::size_t>(a)] > losses[static_cast<std::size_t>(b)];
    });
    RankedPopulation ranked(static_cast<std::size_t>(config.population_size));
    for (int r = 0; r < config.population_size; ++r) {
      const int j = order[static_cast<std::size_t>(r)];
      ranked[static_cast<std::size_t>(r)].point = samples[static_cast<std::size_t>(j)];
      ranked[static_cast<std::size_t>(r)].fitness = -losses[static_cast<std::size_t>(j)];
    }
    state = update_distribution(state, params, ranked);
    ++generations;

    const auto& gb = samples[static_cast<std::size_t>(gen_best_index)];
    std::copy(gb.data(), gb.data() + n, last_gen_best.values.begin());
    if (gen_best > best_loss) {
      best_loss = gen_best;
      best_tile = last_gen_best;
    }
    trace.push_back({generations - 1, ledger.total_queries(), gen_best});
    if (config.on_generation) {
      config.on_generation(
          {generations, ledger.total_queries(), gen_best, state.step_size, best_tile});
    }
  }

  const PerturbationTile& chosen = config.fidelity_pick ? last_gen_best : best_tile;
  AttackOutcome outcome{tile_expand(chosen, shape.height, shape.width), AttackReport{},
                        std::move(ledger)};
  outcome.report.algorithm = "yoqo";
  outcome.report.config = {
      {"algorithm", "yoqo"},
      {"tile_side", std::to_string(config.tile_side)},
      {"population", std::to_string(config.population_size)},
      {"batch", std::to_string(config.batch_size)},
      {"iterations", std::to_string(config.max_generations)},
      {"epsilon", format_double(config.epsilon)},
      {"sigma0", format_double(sigma0)},
      {"objective", config.objective.mode == AttackMode::Untargeted ? "untargeted" : "targeted"},
      {"target_class", std::to_string(config.objective.target_class)},
      {"seed", std::to_string(config.seed)},
      {"fidelity_pick", config.fidelity_pick ? "1" : "0"},
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
