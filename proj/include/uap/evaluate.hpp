#pragma once

#include <span>
#include <vector>

#include "uap/dataset.hpp"
#include "uap/loss.hpp"
#include "uap/oracle.hpp"
#include "uap/tensor.hpp"

namespace uap {

struct EvaluationResult {
  AttackMode mode = AttackMode::Untargeted;
  int target_class = -1;  // -1 for untargeted
  int eligible_count = 0;
  int success_count = 0;
  double success_rate = 0.0;  // success_count / eligible_count
  // Per clean-predicted-class breakdown over the eligible images (indexed by
  // class id). Populated for targeted evaluation.
  std::vector<int> eligible_by_clean_class;
  std::vector<int> success_by_clean_class;
};

// Eligible: holdout images the oracle classifies correctly clean. Success:
// eligible images misclassified after adding the perturbation (with [0,1]
// clipping). Throws std::invalid_argument when nothing is eligible.
EvaluationResult evaluate_untargeted(ClassifierOracle& oracle,
                                     const UniversalPerturbation& perturbation,
                                     const Dataset& data, std::span<const int> holdout_ids);

// Eligible: holdout images NOT classified as the target clean, regardless of
// ground truth. Success: eligible images classified as the target perturbed.
EvaluationResult evaluate_targeted(ClassifierOracle& oracle,
                                   const UniversalPerturbation& perturbation,
                                   const Dataset& data, std::span<const int> holdout_ids,
                                   int target_class);

}  // namespace uap
