#pragma once

#include <span>
#include <vector>

namespace uap {

// Raw classifier scores for the K classes; K >= 2, all entries finite.
struct Logits {
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int k) const { return values[static_cast<std::size_t>(k)]; }
};

enum class AttackMode { Untargeted, Targeted };

struct AttackObjective {
  AttackMode mode = AttackMode::Untargeted;
  int target_class = -1;  // meaningful only when mode == Targeted
};

// Index of the largest score; ties resolve to the lowest index.
int argmax_class(const Logits& logits);

// Softmax cross-entropy of the true label, computed through a max-subtracted
// log-sum-exp so large scores cannot overflow. Always >= 0.
double cross_entropy(const Logits& logits, int label);

// Margin of the target class over the best other class:
// logits[target] - max_{k != target} logits[k]. Positive iff the classifier
// would output the target.
double targeted_loss(const Logits& logits, int target);

// Arithmetic mean of the per-image objective over a batch. Untargeted mode
// averages cross_entropy against the paired labels; targeted mode averages
// targeted_loss and ignores the labels entirely.
double batch_loss(std::span<const Logits> batch, std::span<const int> labels,
                  const AttackObjective& objective);

}  // namespace uap
