#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace uap {

// Strategy constants for one CMA-ES instance. Produced by default_params and
// treated as immutable afterwards.
//
// Weights follow the active-CMA recombination scheme: lambda raw weights
// w'_i = ln((lambda+1)/2) - ln(i), the first s = floor(lambda/2) normalized to
// sum to 1, the remainder scaled negative so that rank-mu updates also exploit
// the worst samples.
struct CmaParams {
  int dimension = 0;        // n
  int population_size = 0;  // lambda, >= 2
  int parent_count = 0;     // s = floor(lambda / 2)
  Eigen::VectorXd weights;  // lambda entries, descending, first s positive
  double c_m = 1.0;         // mean learning rate
  double c_sigma = 0.0;     // step-size path decay
  double d_sigma = 0.0;     // step-size damping
  double c_c = 0.0;         // covariance path decay
  double c_1 = 0.0;         // rank-one learning rate
  double c_mu = 0.0;        // rank-mu learning rate
  double mu_eff = 0.0;      // variance-effective selection mass of the parents
  double chi_n = 0.0;       // E||N(0, I_n)|| ~= sqrt(n)(1 - 1/(4n) + 1/(21n^2))
};

CmaParams default_params(int dimension, int population_size);

// Full search-distribution state. covariance stays symmetric positive
// definite; repair_events counts eigenvalue floors applied to keep it so.
struct CmaState {
  Eigen::VectorXd mean;
  double step_size = 0.0;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  int generation = 0;
  std::uint64_t repair_events = 0;
};

CmaState initial_state(const CmaParams& params, Eigen::VectorXd mean, double step_size);

// One evaluated sample. RankedPopulation is ordered best-first under the
// current objective (minimization): fitness[0] <= fitness[1] <= ...
struct RankedSample {
  Eigen::VectorXd point;
  double fitness = 0.0;
};
using RankedPopulation = std::vector<RankedSample>;

// Draws lambda samples from N(mean, step_size^2 * covariance) via the
// eigendecomposition of the covariance, then clamps every coordinate into
// [-bound, bound]. Deterministic given the rng state.
std::vector<Eigen::VectorXd> sample_population(const CmaState& state, const CmaParams& params,
                                               double bound, std::mt19937_64& rng);

// One full distribution update from a ranked population:
//   <y>_w   = sum_{j<s} w_j (z_j - mean) / sigma
//   mean   += c_m sigma <y>_w
//   p_sigma = (1-c_sigma) p_sigma + sqrt(c_sigma(2-c_sigma) mu_eff) C^{-1/2} <y>_w
//   sigma  *= exp((c_sigma/d_sigma)(||p_sigma||/chi_n - 1))
//   p_c     = (1-c_c) p_c + sqrt(c_c(2-c_c) mu_eff) <y>_w
//   C       = (1 - c_1 - c_mu sum w) C + c_1 p_c p_c^T + c_mu sum_j w_j* y_j y_j^T
// with y_j = (z_j - old mean)/old sigma and w_j* = w_j for positive weights,
// w_j n / ||C^{-1/2} y_j||^2 for negative ones. Only sample ranks are read,
// never fitness values, so any strictly increasing transform of the objective
// yields an identical update.
CmaState update_distribution(const CmaState& state, const CmaParams& params,
                             const RankedPopulation& ranked);

struct CmaTraceRecord {
  int generation = 0;
  double step_size = 0.0;
  double best_fitness = 0.0;
  double median_fitness = 0.0;
  std::uint64_t repair_events = 0;
};

struct CmaRunOptions {
  Eigen::VectorXd initial_mean;  // empty -> zeros
  double initial_step = -1.0;    // <= 0 -> 0.6 * bound
  // True returns the best point ever evaluated; false reproduces the
  // last-generation-only selection some descriptions use.
  bool track_global_best = true;
  std::function<void(const CmaTraceRecord&)> trace;
};

struct CmaRunResult {
  Eigen::VectorXd best_point;
  double best_fitness = 0.0;
  int generations = 0;
  CmaState final_state;
};

// Minimizes objective over the box [-bound, bound]^n.
CmaRunResult run_cma(const std::function<double(const Eigen::VectorXd&)>& objective,
                     const CmaParams& params, double bound, int max_generations,
                     std::mt19937_64& rng, const CmaRunOptions& options = {});

}  // namespace uap
