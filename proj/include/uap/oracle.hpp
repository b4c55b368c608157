#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "uap/loss.hpp"
#include "uap/tensor.hpp"

namespace uap {

// The black-box boundary. Implementations must be deterministic; every call
// to query() bumps the counter by exactly one.
class ClassifierOracle {
 public:
  virtual ~ClassifierOracle() = default;
  virtual int input_size() const = 0;
  virtual int class_count() const = 0;

  Logits query(std::span<const double> x) {
    ++query_counter_;
    return evaluate(x);
  }
  std::uint64_t query_counter() const { return query_counter_; }

 protected:
  virtual Logits evaluate(std::span<const double> x) const = 0;

 private:
  std::uint64_t query_counter_ = 0;
};

enum class Activation : std::uint8_t { Identity = 0, Relu = 1 };

// Dense layer computing act(W^T x + b); weights is rows-by-cols = in-by-out.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  Activation activation = Activation::Identity;
};

struct FeedForwardModel {
  std::vector<DenseLayer> layers;

  int input_size() const;
  int class_count() const;
};

// Throws ShapeError unless consecutive layer dimensions chain and the final
// activation is identity (raw logits out).
void validate_model(const FeedForwardModel& model);

Logits forward(const FeedForwardModel& model, std::span<const double> x);

// Batched forward pass: inputs is batch-by-input_size, returns batch-by-K.
Eigen::MatrixXd forward_batch(const FeedForwardModel& model, const Eigen::MatrixXd& inputs);

class FeedForwardOracle final : public ClassifierOracle {
 public:
  explicit FeedForwardOracle(FeedForwardModel model);
  int input_size() const override { return model_.input_size(); }
  int class_count() const override { return model_.class_count(); }
  const FeedForwardModel& model() const { return model_; }

 protected:
  Logits evaluate(std::span<const double> x) const override;

 private:
  FeedForwardModel model_;
};

}  // namespace uap
