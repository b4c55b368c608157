#include "uap/loss.hpp"

#include <cmath>
#include <string>

#include "uap/errors.hpp"

namespace uap {

namespace {

void check_logits(const Logits& logits) {
  if (logits.size() < 2) {
    throw std::invalid_argument("logits must score at least two classes, got K=" +
                                std::to_string(logits.size()));
  }
  for (double v : logits.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("logits contain a non-finite value");
  }
}

}  // namespace

int argmax_class(const Logits& logits) {
  if (logits.size() == 0) throw std::invalid_argument("argmax_class: empty logits");
  int best = 0;
  for (int k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return best;
}

double cross_entropy(const Logits& logits, int label) {
  check_logits(logits);
  if (label < 0 || label >= logits.size()) {
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(logits.size()) + ")");
  }
  const double m = logits[argmax_class(logits)];
  double sum = 0.0;
  for (double v : logits.values) sum += std::exp(v - m);
  // log-sum-exp(logits) - logits[label]; >= 0 because lse >= max >= any entry.
  return (m + std::log(sum)) - logits[label];
}

double targeted_loss(const Logits& logits, int target) {
  if (logits.size() == 1) {
    throw std::invalid_argument("targeted_loss: single-class logits have no competing class");
  }
  check_logits(logits);
  if (target < 0 || target >= logits.size()) {
    throw std::out_of_range("targeted_loss: target " + std::to_string(target) +
                            " outside [0, " + std::to_string(logits.size()) + ")");
  }
  int best_other = -1;
  for (int k = 0; k < logits.size(); ++k) {
    if (k == target) continue;
    if (best_other < 0 || logits[k] > logits[best_other]) best_other = k;
  }
  return logits[target] - logits[best_other];
}

double batch_loss(std::span<const Logits> batch, std::span<const int> labels,
                  const AttackObjective& objective) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double sum = 0.0;
  if (objective.mode == AttackMode::Untargeted) {
    if (labels.size() != batch.size()) {
      throw std::invalid_argument("batch_loss: untargeted mode needs one label per image");
    }
    for (std::size_t b = 0; b < batch.size(); ++b) sum += cross_entropy(batch[b], labels[b]);
  } else {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      sum += targeted_loss(batch[b], objective.target_class);
    }
  }
  return sum / static_cast<double>(batch.size());
}

}  // namespace uap
