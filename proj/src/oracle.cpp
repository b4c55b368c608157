#include "uap/oracle.hpp"

#include <string>

#include "uap/errors.hpp"

namespace uap {

int FeedForwardModel::input_size() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weights.rows());
}

int FeedForwardModel::class_count() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weights.cols());
}

void validate_model(const FeedForwardModel& model) {
  if (model.layers.empty()) throw ShapeError("model: no layers");
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    if (layer.weights.rows() < 1 || layer.weights.cols() < 1) {
      throw ShapeError("model: layer " + std::to_string(i) + " has empty weight matrix");
    }
    if (layer.bias.size() != layer.weights.cols()) {
      throw ShapeError("model: layer " + std::to_string(i) + " bias length " +
                       std::to_string(layer.bias.size()) + " != output width " +
                       std::to_string(layer.weights.cols()));
    }
    if (i + 1 < model.layers.size() &&
        model.layers[i + 1].weights.rows() != layer.weights.cols()) {
      throw ShapeError("model: layer " + std::to_string(i + 1) + " input width " +
                       std::to_string(model.layers[i + 1].weights.rows()) +
                       " != previous output width " + std::to_string(layer.weights.cols()));
    }
  }
  if (model.layers.back().activation != Activation::Identity) {
    throw ShapeError("model: final layer must have identity activation (logits out)");
  }
}

Logits forward(const FeedForwardModel& model, std::span<const double> x) {
  if (model.layers.empty()) throw ShapeError("forward: model has no layers");
  if (static_cast<int>(x.size()) != model.input_size()) {
    throw ShapeError("forward: input size " + std::to_string(x.size()) +
                     " != model input size " + std::to_string(model.input_size()));
  }
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  for (const auto& layer : model.layers) {
    Eigen::VectorXd z = layer.weights.transpose() * h + layer.bias;
    if (layer.activation == Activation::Relu) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  Logits out;
  out.values.assign(h.data(), h.data() + h.size());
  return out;
}

Eigen::MatrixXd forward_batch(const FeedForwardModel& model, const Eigen::MatrixXd& inputs) {
  if (model.layers.empty()) throw ShapeError("forward_batch: model has no layers");
  if (inputs.cols() != model.input_size()) {
    throw ShapeError("forward_batch: input width does not match model");
  }
  Eigen::MatrixXd h = inputs;
  for (const auto& layer : model.layers) {
    Eigen::MatrixXd z = (h * layer.weights).rowwise() + layer.bias.transpose();
    if (layer.activation == Activation::Relu) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

FeedForwardOracle::FeedForwardOracle(FeedForwardModel model) : model_(std::move(model)) {
  validate_model(model_);
}

Logits FeedForwardOracle::evaluate(std::span<const double> x) const {
  return forward(model_, x);
}

}  // namespace uap
