#include "uap/evaluate.hpp"

#include <stdexcept>
#include <string>

#include "uap/errors.hpp"

namespace uap {

namespace {

void check_inputs(const ClassifierOracle& oracle, const UniversalPerturbation& perturbation,
                  const Dataset& data, std::span<const int> holdout_ids) {
  validate_dataset(data);
  if (holdout_ids.empty()) throw std::invalid_argument("evaluate: empty holdout");
  if (perturbation.shape != data.shape) {
    throw ShapeError("evaluate: perturbation shape does not match dataset images");
  }
  if (oracle.input_size() != static_cast<int>(data.shape.size())) {
    throw ShapeError("evaluate: oracle input size does not match dataset images");
  }
}

std::vector<double> clean_point(std::span<const float> pixels) {
  return {pixels.begin(), pixels.end()};
}

}  // namespace

EvaluationResult evaluate_untargeted(ClassifierOracle& oracle,
                                     const UniversalPerturbation& perturbation,
                                     const Dataset& data, std::span<const int> holdout_ids) {
  check_inputs(oracle, perturbation, data, holdout_ids);
  if (!data.labeled()) throw std::invalid_argument("evaluate_untargeted: unlabeled dataset");
  EvaluationResult result;
  result.mode = AttackMode::Untargeted;
  const int classes = oracle.class_count();
  result.eligible_by_clean_class.assign(static_cast<std::size_t>(classes), 0);
  result.success_by_clean_class.assign(static_cast<std::size_t>(classes), 0);
  for (int id : holdout_ids) {
    const auto pixels = data.image(id);
    const int clean_pred = argmax_class(oracle.query(clean_point(pixels)));
    if (clean_pred != data.label(id)) continue;
    ++result.eligible_count;
    ++result.eligible_by_clean_class[static_cast<std::size_t>(clean_pred)];
    const int adv_pred =
        argmax_class(oracle.query(perturbed_query(pixels, data.shape, perturbation)));
    if (adv_pred != data.label(id)) {
      ++result.success_count;
      ++result.success_by_clean_class[static_cast<std::size_t>(clean_pred)];
    }
  }
  if (result.eligible_count == 0) {
    throw std::invalid_argument(
        "evaluate_untargeted: no holdout image is classified correctly clean");
  }
  result.success_rate =
      static_cast<double>(result.success_count) / static_cast<double>(result.eligible_count);
  return result;
}

EvaluationResult evaluate_targeted(ClassifierOracle& oracle,
                                   const UniversalPerturbation& perturbation,
                                   const Dataset& data, std::span<const int> holdout_ids,
                                   int target_class) {
  check_inputs(oracle, perturbation, data, holdout_ids);
  const int classes = oracle.class_count();
  if (target_class < 0 || target_class >= classes) {
    throw std::out_of_range("evaluate_targeted: target_class " + std::to_string(target_class) +
                            " outside [0, " + std::to_string(classes) + ")");
  }
  EvaluationResult result;
  result.mode = AttackMode::Targeted;
  result.target_class = target_class;
  result.eligible_by_clean_class.assign(static_cast<std::size_t>(classes), 0);
  result.success_by_clean_class.assign(static_cast<std::size_t>(classes), 0);
  for (int id : holdout_ids) {
    const auto pixels = data.image(id);
    const int clean_pred = argmax_class(oracle.query(clean_point(pixels)));
    if (clean_pred == target_class) continue;
    ++result.eligible_count;
    ++result.eligible_by_clean_class[static_cast<std::size_t>(clean_pred)];
    const int adv_pred =
        argmax_class(oracle.query(perturbed_query(pixels, data.shape, perturbation)));
    if (adv_pred == target_class) {
      ++result.success_count;
      ++result.success_by_clean_class[static_cast<std::size_t>(clean_pred)];
    }
  }
  if (result.eligible_count == 0) {
    throw std::invalid_argument(
        "evaluate_targeted: every holdout image is already classified as the target");
  }
  result.success_rate =
      static_cast<double>(result.success_count) / static_cast<double>(result.eligible_count);
  return result;
}

}  // namespace uap
