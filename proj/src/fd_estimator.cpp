#include "uap/fd_estimator.hpp"

#include <string>

#include "uap/errors.hpp"

namespace uap {

namespace {

PerturbationTile shifted_tile(const PerturbationTile& delta, const Eigen::VectorXd& direction,
                              double step) {
  PerturbationTile t = delta;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    t.values[k] += step * direction[static_cast<Eigen::Index>(k)];
  }
  project_linf_inplace(t.values, t.epsilon);
  return t;
}

}  // namespace

Eigen::VectorXd two_sided_estimate(const QueryLossFn& oracle_loss,
                                   std::span<const StreamItem> batch,
                                   const TensorShape& image_shape, const PerturbationTile& delta,
                                   const Eigen::VectorXd& direction, double mu,
                                   QueryLedger& ledger) {
  if (batch.empty()) throw std::invalid_argument("two_sided_estimate: empty batch");
  if (!(mu > 0.0)) throw std::invalid_argument("two_sided_estimate: mu must be > 0");
  if (direction.size() != static_cast<Eigen::Index>(delta.size())) {
    throw ShapeError("two_sided_estimate: direction dimension " +
                     std::to_string(direction.size()) + " != tile dimension " +
                     std::to_string(delta.size()));
  }

  const UniversalPerturbation plus =
      tile_expand(shifted_tile(delta, direction, mu), image_shape.height, image_shape.width);
  const UniversalPerturbation minus =
      tile_expand(shifted_tile(delta, direction, -mu), image_shape.height, image_shape.width);

  double quotient_sum = 0.0;
  for (const StreamItem& item : batch) {
    const std::vector<double> q_plus = perturbed_query(item.pixels, image_shape, plus);
    ledger.record_query(item.id, q_plus, item.pixels);
    const double loss_plus = oracle_loss(q_plus, item.label);

    const std::vector<double> q_minus = perturbed_query(item.pixels, image_shape, minus);
    ledger.record_query(item.id, q_minus, item.pixels);
    const double loss_minus = oracle_loss(q_minus, item.label);

    quotient_sum += (loss_plus - loss_minus) / (2.0 * mu);
  }
  return (quotient_sum / static_cast<double>(batch.size())) * direction;
}

Eigen::VectorXd averaged_gradient(const QueryLossFn& oracle_loss, DatasetStream& sampler,
                                  const PerturbationTile& delta, const FdConfig& config,
                                  int iteration, QueryLedger& ledger) {
  if (config.directions_per_step < 1) {
    throw std::invalid_argument("averaged_gradient: directions_per_step must be >= 1");
  }
  if (config.batch_size < 1) {
    throw std::invalid_argument("averaged_gradient: batch_size must be >= 1");
  }
  if (iteration < 0) throw std::invalid_argument("averaged_gradient: negative iteration");
  const int n = config.basis.dimension();
  const int j_count = config.directions_per_step;

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < j_count; ++j) {
    const int index = static_cast<int>(
        (static_cast<long long>(iteration) * j_count + j) % n);
    const Eigen::VectorXd direction = basis_vector(config.basis, index);
    const auto batch = sampler.draw(config.batch_size);
    sum += two_sided_estimate(oracle_loss, batch, sampler.shape(), delta, direction,
                              config.smoothing, ledger);
  }
  return sum / static_cast<double>(j_count);
}

}  // namespace uap
