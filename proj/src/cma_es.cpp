#include "uap/cma_es.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "uap/errors.hpp"

namespace uap {

namespace {

// Eigendecomposition of a symmetric matrix, with failure mapped to the
// module's numerical-degeneracy error carrying a snippet of the matrix.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> factor(const Eigen::MatrixXd& cov,
                                                      const char* where) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << where << ": covariance factorization failed, matrix "
        << cov.rows() << "x" << cov.cols();
    const int k = static_cast<int>(std::min<Eigen::Index>(cov.rows(), 4));
    msg << ", leading block:\n" << cov.topLeftCorner(k, k);
    throw NumericalError(msg.str());
  }
  return es;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
  Eigen::VectorXd inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    inv[i] = 1.0 / std::sqrt(std::max(inv[i], 1e-300));
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

CmaParams default_params(int dimension, int population_size) {
  if (dimension < 1) throw std::invalid_argument("default_params: dimension must be >= 1");
  if (population_size < 2) {
    throw std::invalid_argument("default_params: population_size must be >= 2");
  }
  const int n = dimension;
  const int lambda = population_size;
  const int s = lambda / 2;

  Eigen::VectorXd raw(lambda);
  for (int i = 0; i < lambda; ++i) {
    raw[i] = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
  }
  const double pos_sum = raw.head(s).sum();
  const double pos_sq = raw.head(s).squaredNorm();
  const double mu_eff = pos_sum * pos_sum / pos_sq;
  const double neg_sum = raw.tail(lambda - s).sum();
  const double neg_sq = raw.tail(lambda - s).squaredNorm();
  const double mu_eff_neg = neg_sq > 0.0 ? neg_sum * neg_sum / neg_sq : 0.0;

  CmaParams p;
  p.dimension = n;
  p.population_size = lambda;
  p.parent_count = s;
  p.mu_eff = mu_eff;
  p.c_m = 1.0;
  p.c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
  p.c_mu = std::min(1.0 - p.c_1,
                    2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));

  // Negative ("active") weights: scaled so the covariance update stays
  // positive definite and the negative selection mass is balanced.
  p.weights = raw;
  for (int i = 0; i < s; ++i) p.weights[i] = raw[i] / pos_sum;
  double neg_scale = 1.0 + 2.0 * mu_eff_neg / (mu_eff + 2.0);
  if (p.c_mu > 0.0) {
    neg_scale = std::min(neg_scale, 1.0 + p.c_1 / p.c_mu);
    neg_scale = std::min(neg_scale, (1.0 - p.c_1 - p.c_mu) / (n * p.c_mu));
  }
  const double neg_abs = std::abs(raw.tail(lambda - s).sum());
  for (int i = s; i < lambda; ++i) {
    p.weights[i] = neg_abs > 0.0 ? neg_scale * raw[i] / neg_abs : 0.0;
  }

  p.chi_n = std::sqrt(static_cast<double>(n)) *
            (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * static_cast<double>(n) * n));
  return p;
}

CmaState initial_state(const CmaParams& params, Eigen::VectorXd mean, double step_size) {
  if (mean.size() != params.dimension) {
    throw ShapeError("initial_state: mean dimension does not match params");
  }
  if (!(step_size > 0.0)) throw std::invalid_argument("initial_state: step_size must be > 0");
  CmaState st;
  st.mean = std::move(mean);
  st.step_size = step_size;
  st.covariance = Eigen::MatrixXd::Identity(params.dimension, params.dimension);
  st.path_sigma = Eigen::VectorXd::Zero(params.dimension);
  st.path_c = Eigen::VectorXd::Zero(params.dimension);
  st.generation = 0;
  return st;
}

std::vector<Eigen::VectorXd> sample_population(const CmaState& state, const CmaParams& params,
                                               double bound, std::mt19937_64& rng) {
  if (!(bound > 0.0)) throw std::invalid_argument("sample_population: bound must be > 0");
  const int n = params.dimension;
  const auto es = factor(state.covariance, "sample_population");
  Eigen::VectorXd scale = es.eigenvalues();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!std::isfinite(scale[i])) {
      throw NumericalError("sample_population: non-finite covariance eigenvalue");
    }
    scale[i] = std::sqrt(std::max(scale[i], 0.0));
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(params.population_size);
  Eigen::VectorXd xi(n);
  for (int j = 0; j < params.population_size; ++j) {
    for (int i = 0; i < n; ++i) xi[i] = gauss(rng);
    Eigen::VectorXd z = state.mean + state.step_size * (es.eigenvectors() * (scale.array() * xi.array()).matrix());
    for (int i = 0; i < n; ++i) z[i] = std::clamp(z[i], -bound, bound);
    out.push_back(std::move(z));
  }
  return out;
}

CmaState update_distribution(const CmaState& state, const CmaParams& params,
                             const RankedPopulation& ranked) {
  const int n = params.dimension;
  const int lambda = params.population_size;
  const int s = params.parent_count;
  if (static_cast<int>(ranked.size()) != lambda) {
    throw std::invalid_argument("update_distribution: ranked population must have lambda entries");
  }
  for (const auto& r : ranked) {
    if (r.point.size() != n) {
      throw ShapeError("update_distribution: sample dimension does not match params");
    }
  }

  const Eigen::VectorXd& mu_old = state.mean;
  const double sigma_old = state.step_size;
  const auto es_old = factor(state.covariance, "update_distribution");
  const Eigen::MatrixXd cov_inv_sqrt = inverse_sqrt(es_old);

  // Normalized displacements of every sample from the old distribution.
  std::vector<Eigen::VectorXd> y(lambda);
  for (int j = 0; j < lambda; ++j) y[j] = (ranked[j].point - mu_old) / sigma_old;

  Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < s; ++j) y_w += params.weights[j] * y[j];

  CmaState next = state;
  next.mean = mu_old + params.c_m * sigma_old * y_w;

  const double cs = params.c_sigma;
  next.path_sigma = (1.0 - cs) * state.path_sigma +
                    std::sqrt(cs * (2.0 - cs) * params.mu_eff) * (cov_inv_sqrt * y_w);
  next.step_size =
      sigma_old * std::exp((cs / params.d_sigma) * (next.path_sigma.norm() / params.chi_n - 1.0));

  const double cc = params.c_c;
  next.path_c = (1.0 - cc) * state.path_c + std::sqrt(cc * (2.0 - cc) * params.mu_eff) * y_w;

  const double w_sum = params.weights.sum();
  Eigen::MatrixXd cov = (1.0 - params.c_1 - params.c_mu * w_sum) * state.covariance +
                        params.c_1 * (next.path_c * next.path_c.transpose());
  for (int j = 0; j < lambda; ++j) {
    double w = params.weights[j];
    if (w == 0.0) continue;
    if (w < 0.0) {
      const double norm_sq = (cov_inv_sqrt * y[j]).squaredNorm();
      if (norm_sq <= 0.0) continue;
      w *= n / norm_sq;
    }
    cov.noalias() += (params.c_mu * w) * (y[j] * y[j].transpose());
  }
  cov = 0.5 * (cov + cov.transpose().eval());

  // Positive-definiteness repair by eigenvalue flooring.
  const auto es_new = factor(cov, "update_distribution(repair)");
  double floor = 1e-14 * cov.trace() / n;
  if (!(floor > 0.0)) floor = 1e-300;
  if (es_new.eigenvalues().minCoeff() < floor) {
    Eigen::VectorXd fixed = es_new.eigenvalues().cwiseMax(floor);
    cov = es_new.eigenvectors() * fixed.asDiagonal() * es_new.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose().eval());
    next.repair_events = state.repair_events + 1;
  }
  next.covariance = std::move(cov);
  next.generation = state.generation + 1;
  return next;
}

CmaRunResult run_cma(const std::function<double(const Eigen::VectorXd&)>& objective,
                     const CmaParams& params, double bound, int max_generations,
                     std::mt19937_64& rng, const CmaRunOptions& options) {
  if (max_generations <= 0) throw std::invalid_argument("run_cma: max_generations must be > 0");
  if (!(bound > 0.0)) throw std::invalid_argument("run_cma: bound must be > 0");

  Eigen::VectorXd mean = options.initial_mean.size() > 0
                             ? options.initial_mean
                             : Eigen::VectorXd::Zero(params.dimension);
  const double sigma0 = options.initial_step > 0.0 ? options.initial_step : 0.6 * bound;
  CmaState state = initial_state(params, std::move(mean), sigma0);

  CmaRunResult result;
  result.best_fitness = std::numeric_limits<double>::infinity();
  Eigen::VectorXd last_gen_best;
  double last_gen_best_fitness = std::numeric_limits<double>::infinity();

  const int lambda = params.population_size;
  std::vector<double> fitness(lambda);
  std::vector<int> order(lambda);
  for (int gen = 0; gen < max_generations; ++gen) {
    auto samples = sample_population(state, params, bound, rng);
    for (int j = 0; j < lambda; ++j) fitness[j] = objective(samples[j]);

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] < fitness[b]; });

    RankedPopulation ranked(lambda);
    for (int r = 0; r < lambda; ++r) {
      ranked[r].point = samples[order[r]];
      ranked[r].fitness = fitness[order[r]];
    }

    last_gen_best = ranked[0].point;
    last_gen_best_fitness = ranked[0].fitness;
    if (ranked[0].fitness < result.best_fitness) {
      result.best_fitness = ranked[0].fitness;
      result.best_point = ranked[0].point;
    }

    state = update_distribution(state, params, ranked);

    if (options.trace) {
      CmaTraceRecord rec;
      rec.generation = state.generation;
      rec.step_size = state.step_size;
      rec.best_fitness = ranked[0].fitness;
      rec.median_fitness = ranked[(lambda - 1) / 2].fitness;
      rec.repair_events = state.repair_events;
      options.trace(rec);
    }
  }

  result.generations = state.generation;
  if (!options.track_global_best) {
    result.best_point = last_gen_best;
    result.best_fitness = last_gen_best_fitness;
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace uap
