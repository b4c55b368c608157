#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "uap/dataset.hpp"
#include "uap/oracle.hpp"

namespace uap {

struct ArchSpec {
  int input_size = 0;
  std::vector<int> hidden;  // relu widths, may be empty (softmax regression)
  int class_count = 0;
};

// Seeded Gaussian initialization scaled by 1/sqrt(fan_in); biases zero.
FeedForwardModel init_model(const ArchSpec& arch, std::uint64_t seed);

struct BatchGradients {
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;
  double mean_loss = 0.0;
};

// Mean softmax cross-entropy over the batch (rows of inputs) plus its exact
// gradients for every layer, by analytic backpropagation.
BatchGradients loss_and_gradients(const FeedForwardModel& model, const Eigen::MatrixXd& inputs,
                                  std::span<const int> labels);

double batch_mean_loss(const FeedForwardModel& model, const Eigen::MatrixXd& inputs,
                       std::span<const int> labels);

double accuracy(const FeedForwardModel& model, const Dataset& data, std::span<const int> ids);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 5;
  int batch_size = 64;
  std::uint64_t seed = 1;
};

struct TrainResult {
  FeedForwardModel model;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
  std::vector<double> epoch_mean_losses;
};

// Minibatch gradient descent on mean cross-entropy. Deterministic given the
// seed. Throws NumericalError if the loss ever becomes non-finite; zero
// epochs returns the seeded initialization unchanged.
TrainResult train_reference(const Dataset& data, std::span<const int> train_ids,
                            std::span<const int> holdout_ids, const ArchSpec& arch,
                            const TrainConfig& config);

}  // namespace uap
