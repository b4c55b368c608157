#include "uap/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "uap/errors.hpp"

namespace uap {

namespace {

Eigen::MatrixXd gather_rows(const Dataset& data, std::span<const int> ids, std::size_t begin,
                            std::size_t end) {
  const auto in = static_cast<Eigen::Index>(data.shape.size());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(end - begin), in);
  for (std::size_t r = begin; r < end; ++r) {
    const auto img = data.image(ids[r]);
    for (Eigen::Index k = 0; k < in; ++k) {
      rows(static_cast<Eigen::Index>(r - begin), k) = img[static_cast<std::size_t>(k)];
    }
  }
  return rows;
}

int argmax_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  int best = 0;
  for (Eigen::Index k = 1; k < m.cols(); ++k) {
    if (m(r, k) > m(r, best)) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace

FeedForwardModel init_model(const ArchSpec& arch, std::uint64_t seed) {
  if (arch.input_size < 1 || arch.class_count < 2) {
    throw std::invalid_argument("init_model: need input_size >= 1 and class_count >= 2");
  }
  for (int h : arch.hidden) {
    if (h < 1) throw std::invalid_argument("init_model: hidden width must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FeedForwardModel model;
  int in = arch.input_size;
  auto add_layer = [&](int out, Activation act) {
    DenseLayer layer;
    layer.weights.resize(in, out);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        layer.weights(r, c) = scale * gauss(rng);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = act;
    model.layers.push_back(std::move(layer));
    in = out;
  };
  for (int h : arch.hidden) add_layer(h, Activation::Relu);
  add_layer(arch.class_count, Activation::Identity);
  validate_model(model);
  return model;
}

BatchGradients loss_and_gradients(const FeedForwardModel& model, const Eigen::MatrixXd& inputs,
                                  std::span<const int> labels) {
  validate_model(model);
  const auto batch = inputs.rows();
  if (batch < 1) throw std::invalid_argument("loss_and_gradients: empty batch");
  if (labels.size() != static_cast<std::size_t>(batch)) {
    throw std::invalid_argument("loss_and_gradients: one label per row required");
  }
  const int num_layers = static_cast<int>(model.layers.size());

  // Forward pass keeping every activation for the backward sweep.
  std::vector<Eigen::MatrixXd> acts(static_cast<std::size_t>(num_layers) + 1);
  acts[0] = inputs;
  for (int l = 0; l < num_layers; ++l) {
    const auto& layer = model.layers[static_cast<std::size_t>(l)];
    Eigen::MatrixXd z = (acts[static_cast<std::size_t>(l)] * layer.weights).rowwise() +
                        layer.bias.transpose();
    if (layer.activation == Activation::Relu) z = z.cwiseMax(0.0);
    acts[static_cast<std::size_t>(l) + 1] = std::move(z);
  }

  const Eigen::MatrixXd& logits = acts.back();
  const int classes = static_cast<int>(logits.cols());
  double loss_sum = 0.0;
  Eigen::MatrixXd dz = logits;  // becomes (softmax - onehot) / batch
  for (Eigen::Index r = 0; r < batch; ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= classes) {
      throw std::out_of_range("loss_and_gradients: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(classes) + ")");
    }
    const double m = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) sum += std::exp(logits(r, k) - m);
    loss_sum += (m + std::log(sum)) - logits(r, label);
    for (Eigen::Index k = 0; k < classes; ++k) {
      dz(r, k) = std::exp(logits(r, k) - m) / sum;
    }
    dz(r, label) -= 1.0;
  }
  dz /= static_cast<double>(batch);

  BatchGradients g;
  g.mean_loss = loss_sum / static_cast<double>(batch);
  g.weight_grads.resize(static_cast<std::size_t>(num_layers));
  g.bias_grads.resize(static_cast<std::size_t>(num_layers));
  for (int l = num_layers - 1; l >= 0; --l) {
    const auto& layer = model.layers[static_cast<std::size_t>(l)];
    g.weight_grads[static_cast<std::size_t>(l)].noalias() =
        acts[static_cast<std::size_t>(l)].transpose() * dz;
    g.bias_grads[static_cast<std::size_t>(l)] = dz.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd da = dz * layer.weights.transpose();
      // Relu derivative: pass-through where the stored activation is positive.
      const auto& a_prev = acts[static_cast<std::size_t>(l)];
      if (model.layers[static_cast<std::size_t>(l) - 1].activation == Activation::Relu) {
        dz = (a_prev.array() > 0.0).cast<double>() * da.array();
      } else {
        dz = std::move(da);
      }
    }
  }
  return g;
}

double batch_mean_loss(const FeedForwardModel& model, const Eigen::MatrixXd& inputs,
                       std::span<const int> labels) {
  const Eigen::MatrixXd logits = forward_batch(model, inputs);
  double loss_sum = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) sum += std::exp(logits(r, k) - m);
    loss_sum += (m + std::log(sum)) - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return loss_sum / static_cast<double>(logits.rows());
}

double accuracy(const FeedForwardModel& model, const Dataset& data, std::span<const int> ids) {
  if (ids.empty()) throw std::invalid_argument("accuracy: no ids");
  if (!data.labeled()) throw std::invalid_argument("accuracy: dataset is unlabeled");
  const std::size_t chunk = 1024;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < ids.size(); begin += chunk) {
    const std::size_t end = std::min(ids.size(), begin + chunk);
    const Eigen::MatrixXd logits = forward_batch(model, gather_rows(data, ids, begin, end));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      if (argmax_row(logits, r) == data.label(ids[begin + static_cast<std::size_t>(r)])) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

TrainResult train_reference(const Dataset& data, std::span<const int> train_ids,
                            std::span<const int> holdout_ids, const ArchSpec& arch,
                            const TrainConfig& config) {
  validate_dataset(data);
  if (!data.labeled()) throw std::invalid_argument("train_reference: dataset is unlabeled");
  if (train_ids.empty()) throw std::invalid_argument("train_reference: no training ids");
  if (config.epochs < 0) throw std::invalid_argument("train_reference: negative epochs");
  if (config.batch_size < 1) throw std::invalid_argument("train_reference: batch_size >= 1");
  if (static_cast<std::size_t>(arch.input_size) != data.shape.size()) {
    throw ShapeError("train_reference: architecture input size does not match image size");
  }

  TrainResult result;
  result.model = init_model(arch, config.seed);
  std::mt19937_64 rng(config.seed + 0x9e3779b97f4a7c15ULL);

  std::vector<int> order(train_ids.begin(), train_ids.end());
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const Eigen::MatrixXd inputs = gather_rows(data, order, begin, end);
      batch_labels.resize(end - begin);
      for (std::size_t r = begin; r < end; ++r) batch_labels[r - begin] = data.label(order[r]);
      BatchGradients g = loss_and_gradients(result.model, inputs, batch_labels);
      if (!std::isfinite(g.mean_loss)) {
        throw NumericalError("train_reference: loss diverged at epoch " + std::to_string(epoch) +
                             "; try a smaller learning rate");
      }
      for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
        result.model.layers[l].weights -= config.learning_rate * g.weight_grads[l];
        result.model.layers[l].bias -= config.learning_rate * g.bias_grads[l];
      }
      epoch_loss += g.mean_loss * static_cast<double>(end - begin);
      seen += end - begin;
    }
    result.epoch_mean_losses.push_back(epoch_loss / static_cast<double>(seen));
  }

  result.train_accuracy = accuracy(result.model, data, train_ids);
  result.holdout_accuracy = holdout_ids.empty() ? 0.0 : accuracy(result.model, data, holdout_ids);
  return result;
}

}  // namespace uap
