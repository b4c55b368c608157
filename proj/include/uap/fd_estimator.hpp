#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>

#include "uap/basis.hpp"
#include "uap/dataset.hpp"
#include "uap/ledger.hpp"
#include "uap/tensor.hpp"

namespace uap {

// Loss of one fully prepared query point (already perturbed and clipped) for
// a base image with the given label. Implementations wrap the oracle plus the
// attack objective; every invocation costs one oracle query.
using QueryLossFn = std::function<double(std::span<const double> query_point, int label)>;

struct FdConfig {
  double smoothing = 0.0;       // mu > 0
  int directions_per_step = 1;  // J >= 1
  int batch_size = 1;           // B >= 1
  DirectionBasis basis;
};

// Two-sided directional derivative estimate at the tile delta:
// mean over the batch of (L(clip(x + expand(proj(delta + mu z)))) -
//                         L(clip(x + expand(proj(delta - mu z))))) / (2 mu) * z.
// The projection hits the tile before expansion. Registers exactly two ledger
// entries per image.
Eigen::VectorXd two_sided_estimate(const QueryLossFn& oracle_loss,
                                   std::span<const StreamItem> batch,
                                   const TensorShape& image_shape, const PerturbationTile& delta,
                                   const Eigen::VectorXd& direction, double mu,
                                   QueryLedger& ledger);

// Arithmetic mean of two_sided_estimate over J directions, each applied to a
// fresh without-replacement batch of B images. Directions for iteration t are
// basis vectors (t*J + 0 ... t*J + J-1) mod n. Propagates StreamExhausted
// when the sampler cannot supply a batch.
Eigen::VectorXd averaged_gradient(const QueryLossFn& oracle_loss, DatasetStream& sampler,
                                  const PerturbationTile& delta, const FdConfig& config,
                                  int iteration, QueryLedger& ledger);

}  // namespace uap
