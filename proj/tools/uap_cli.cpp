// Command-line front end: oracle training, attacks, evaluation, ledger audit,
// and synthetic dataset generation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "uap/errors.hpp"
#include "uap/evaluate.hpp"
#include "uap/experiment.hpp"
#include "uap/io.hpp"
#include "uap/ledger.hpp"
#include "uap/synth.hpp"
#include "uap/train.hpp"

namespace {

int run_train_oracle(const std::filesystem::path& dataset_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& out_path, std::vector<int> hidden, int epochs,
                     double learning_rate, int batch_size, std::uint64_t seed,
                     double holdout_fraction, std::uint64_t holdout_seed) {
  uap::Dataset data = uap::load_images_auto(dataset_path);
  data.labels = uap::load_labels_auto(labels_path);
  uap::validate_dataset(data);
  int classes = 0;
  for (int label : data.labels) classes = std::max(classes, label + 1);

  const uap::HoldoutSplit split =
      uap::split_holdout(data.count, holdout_fraction, holdout_seed);
  uap::ArchSpec arch{static_cast<int>(data.shape.size()), std::move(hidden), classes};
  uap::TrainConfig config;
  config.learning_rate = learning_rate;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.seed = seed;
  const uap::TrainResult result =
      uap::train_reference(data, split.attack_ids, split.holdout_ids, arch, config);
  uap::write_model(out_path, result.model);
  std::cout << "train_accuracy=" << uap::format_double(result.train_accuracy)
            << " holdout_accuracy=" << uap::format_double(result.holdout_accuracy)
            << " model=" << out_path.string() << "\n";
  return 0;
}

int run_attack(uap::ExperimentConfig config) {
  const uap::ExperimentResult result = uap::run_experiment(config, &std::cout);
  std::cout << "median_success_rate=" << uap::format_double(result.median_success_rate)
            << " artifacts=" << config.out.string() << "\n";
  return 0;
}

int run_evaluate(const std::filesystem::path& oracle_path,
                 const std::filesystem::path& dataset_path,
                 const std::filesystem::path& labels_path,
                 const std::filesystem::path& perturbation_path, int target_class,
                 double holdout_fraction, std::uint64_t holdout_seed) {
  uap::Dataset data = uap::load_images_auto(dataset_path);
  if (!labels_path.empty()) {
    data.labels = uap::load_labels_auto(labels_path);
    uap::validate_dataset(data);
  }
  uap::FeedForwardOracle oracle(uap::load_model(oracle_path));
  const uap::UniversalPerturbation perturbation = uap::load_perturbation(perturbation_path);
  const uap::HoldoutSplit split =
      uap::split_holdout(data.count, holdout_fraction, holdout_seed);
  const uap::EvaluationResult eval =
      target_class >= 0
          ? uap::evaluate_targeted(oracle, perturbation, data, split.holdout_ids, target_class)
          : uap::evaluate_untargeted(oracle, perturbation, data, split.holdout_ids);
  std::cout << "mode=" << (target_class >= 0 ? "targeted" : "untargeted")
            << " success_rate=" << uap::format_double(eval.success_rate)
            << " success_count=" << eval.success_count
            << " eligible_count=" << eval.eligible_count << "\n";
  return 0;
}

int run_audit(const std::filesystem::path& ledger_path,
              const std::filesystem::path& dataset_path, int max_images) {
  const uap::LedgerFile file = uap::load_ledger(ledger_path);
  const uap::AuditSummary summary =
      uap::audit_ledger(file.budget, file.epsilon, file.entries);
  std::cout << "budget=" << summary.budget << " epsilon=" << uap::format_double(summary.epsilon)
            << " total_queries=" << summary.total_queries
            << " distinct_images=" << summary.distinct_images
            << " max_per_image=" << summary.max_per_image
            << " budget_violations=" << summary.budget_violations
            << " distance_violations=" << summary.distance_violations << "\n";
  if (dataset_path.empty()) return summary.budget_violations || summary.distance_violations;

  const uap::Dataset data = uap::load_images_auto(dataset_path);
  std::vector<std::int64_t> ids;
  {
    std::set<std::int64_t> distinct;
    for (const auto& e : file.entries) distinct.insert(e.image_id);
    ids.assign(distinct.begin(), distinct.end());
  }
  bool truncated = false;
  if (max_images > 0 && ids.size() > static_cast<std::size_t>(max_images)) {
    ids.resize(static_cast<std::size_t>(max_images));
    truncated = true;
  }
  const uap::NeighborhoodReport report = uap::audit_neighborhoods(ids, data, file.epsilon);
  std::cout << "images_audited=" << report.images_audited
            << " pairs_scanned=" << report.pairs_scanned << " min_pairwise_distance="
            << uap::format_double(report.min_pairwise_distance)
            << " flagged_pairs=" << report.flagged_pairs.size()
            << (truncated ? " (truncated; raise --max-images for the full scan)" : "") << "\n";
  for (const auto& pair : report.flagged_pairs) {
    std::cout << "flagged: " << pair.id_a << " " << pair.id_b
              << " distance=" << uap::format_double(pair.distance) << "\n";
  }
  return (summary.budget_violations || summary.distance_violations ||
          !report.flagged_pairs.empty())
             ? 1
             : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal adversarial perturbation toolkit"};
  app.require_subcommand(1);

  // train-oracle
  auto* train = app.add_subcommand("train-oracle", "Train the dense reference classifier");
  std::filesystem::path t_dataset, t_labels, t_out;
  std::vector<int> t_hidden{64};
  int t_epochs = 5, t_batch = 64;
  double t_lr = 0.1, t_holdout_fraction = 1.0 / 6.0;
  std::uint64_t t_seed = 1, t_holdout_seed = 97;
  train->add_option("--dataset", t_dataset, "image archive (IDX or UAPT)")->required();
  train->add_option("--labels", t_labels, "label archive (IDX or UAPL)")->required();
  train->add_option("--out", t_out, "output model path (NNW1)")->required();
  train->add_option("--hidden", t_hidden, "hidden relu layer widths");
  train->add_option("--epochs", t_epochs, "training epochs");
  train->add_option("--learning-rate", t_lr, "SGD learning rate");
  train->add_option("--batch-size", t_batch, "minibatch size");
  train->add_option("--seed", t_seed, "init/shuffle seed");
  train->add_option("--holdout-fraction", t_holdout_fraction,
                    "fraction reserved for evaluation (never trained on)");
  train->add_option("--holdout-seed", t_holdout_seed, "holdout split seed");

  // attack
  auto* attack = app.add_subcommand("attack", "Run a universal perturbation attack");
  std::filesystem::path a_config;
  uap::ExperimentConfig a;
  a.iterations = 0;
  attack->add_option("--config", a_config, "key = value experiment file (flags override)");
  attack->add_option("--algorithm", a.algorithm, "yoqo | yoqt");
  attack->add_option("--epsilon", a.epsilon, "l-infinity budget");
  attack->add_option("--tile-side", a.tile_size, "perturbation tile side");
  attack->add_option("--population", a.population, "CMA-ES population (yoqo)");
  attack->add_option("--batch", a.batch, "images per fitness/direction batch");
  attack->add_option("--directions", a.directions, "directions per iteration (yoqt)");
  attack->add_option("--mu", a.mu, "finite-difference smoothing (yoqt)");
  attack->add_option("--eta", a.eta, "sign-step size (yoqt)");
  attack->add_option("--basis", a.basis, "fft | canonical | random (yoqt)");
  attack->add_option("--target-class", a.target_class, ">= 0 switches to targeted");
  attack->add_option("--iterations", a.iterations, "generations (yoqo) / PGD steps (yoqt)");
  attack->add_option("--sigma0", a.sigma0, "initial CMA step size (yoqo)");
  attack->add_option("--seed", a.seed, "base seed; run r uses seed + r");
  attack->add_option("--repetitions", a.repetitions, "seeded repetitions (median reported)");
  attack->add_option("--holdout-fraction", a.holdout_fraction, "evaluation holdout fraction");
  attack->add_option("--holdout-seed", a.holdout_seed, "holdout split seed");
  attack->add_flag("--fidelity-pick", a.fidelity_pick,
                   "return the last generation's best tile instead of the global best (yoqo)");
  attack->add_option("--dataset", a.dataset, "image archive");
  attack->add_option("--labels", a.labels, "label archive");
  attack->add_option("--oracle", a.oracle, "NNW1 model file");
  attack->add_option("--out", a.out, "artifact directory");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Evaluate a saved perturbation on the holdout");
  std::filesystem::path e_oracle, e_dataset, e_labels, e_perturbation;
  int e_target = -1;
  double e_holdout_fraction = 1.0 / 6.0;
  std::uint64_t e_holdout_seed = 97;
  eval->add_option("--oracle", e_oracle)->required();
  eval->add_option("--dataset", e_dataset)->required();
  eval->add_option("--labels", e_labels, "required for untargeted evaluation");
  eval->add_option("--perturbation", e_perturbation, "UAPT file")->required();
  eval->add_option("--target-class", e_target, ">= 0 evaluates the targeted criterion");
  eval->add_option("--holdout-fraction", e_holdout_fraction);
  eval->add_option("--holdout-seed", e_holdout_seed);

  // audit-ledger
  auto* audit = app.add_subcommand("audit-ledger", "Recheck a run's query ledger");
  std::filesystem::path l_ledger, l_dataset;
  int l_max_images = 2000;
  audit->add_option("--ledger", l_ledger, "ledger.jsonl from an attack run")->required();
  audit->add_option("--dataset", l_dataset,
                    "image archive for the pairwise neighborhood scan (optional)");
  audit->add_option("--max-images", l_max_images,
                    "cap on images in the O(N^2) scan; <= 0 means no cap");

  // make-data
  auto* make = app.add_subcommand("make-data", "Generate a synthetic dataset");
  std::string m_kind = "prototype", m_format = "idx";
  std::filesystem::path m_images, m_labels;
  int m_count = 1000, m_classes = 10, m_period = 7, m_side = 28;
  double m_contrast = 0.20, m_noise = 0.10, m_amplitude = 0.10, m_sigma = 0.08;
  double m_class1 = 0.35;
  std::uint64_t m_seed = 7;
  make->add_option("--kind", m_kind, "prototype | two-gaussian");
  make->add_option("--out-images", m_images)->required();
  make->add_option("--out-labels", m_labels)->required();
  make->add_option("--count", m_count);
  make->add_option("--seed", m_seed);
  make->add_option("--format", m_format, "idx | uapt");
  make->add_option("--classes", m_classes, "prototype: class count");
  make->add_option("--period", m_period, "prototype: tile period of the class fields");
  make->add_option("--contrast", m_contrast, "prototype: class signal amplitude");
  make->add_option("--noise", m_noise, "prototype: pixel noise sigma");
  make->add_option("--side", m_side, "image side length");
  make->add_option("--amplitude", m_amplitude, "two-gaussian: mean separation amplitude");
  make->add_option("--sigma", m_sigma, "two-gaussian: pixel noise sigma");
  make->add_option("--class1-fraction", m_class1, "two-gaussian: class 1 probability");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return run_train_oracle(t_dataset, t_labels, t_out, t_hidden, t_epochs, t_lr, t_batch,
                              t_seed, t_holdout_fraction, t_holdout_seed);
    }
    if (attack->parsed()) {
      if (!a_config.empty()) {
        uap::ExperimentConfig from_file = uap::load_experiment_config(a_config);
        // Flags the user actually passed override the file.
        for (const auto* opt : attack->get_options()) {
          if (opt->count() == 0) continue;
          const std::string name = opt->get_name();
          if (name == "--config") continue;
          if (name == "--algorithm") from_file.algorithm = a.algorithm;
          else if (name == "--epsilon") from_file.epsilon = a.epsilon;
          else if (name == "--tile-side") from_file.tile_size = a.tile_size;
          else if (name == "--population") from_file.population = a.population;
          else if (name == "--batch") from_file.batch = a.batch;
          else if (name == "--directions") from_file.directions = a.directions;
          else if (name == "--mu") from_file.mu = a.mu;
          else if (name == "--eta") from_file.eta = a.eta;
          else if (name == "--basis") from_file.basis = a.basis;
          else if (name == "--target-class") from_file.target_class = a.target_class;
          else if (name == "--iterations") from_file.iterations = a.iterations;
          else if (name == "--sigma0") from_file.sigma0 = a.sigma0;
          else if (name == "--seed") from_file.seed = a.seed;
          else if (name == "--repetitions") from_file.repetitions = a.repetitions;
          else if (name == "--holdout-fraction") from_file.holdout_fraction = a.holdout_fraction;
          else if (name == "--holdout-seed") from_file.holdout_seed = a.holdout_seed;
          else if (name == "--fidelity-pick") from_file.fidelity_pick = a.fidelity_pick;
          else if (name == "--dataset") from_file.dataset = a.dataset;
          else if (name == "--labels") from_file.labels = a.labels;
          else if (name == "--oracle") from_file.oracle = a.oracle;
          else if (name == "--out") from_file.out = a.out;
        }
        a = std::move(from_file);
      }
      if (a.algorithm != "yoqo" && a.algorithm != "yoqt") {
        std::cerr << "error: --algorithm must be yoqo or yoqt\n";
        return 1;
      }
      if (a.iterations < 1) {
        std::cerr << "error: --iterations must be >= 1\n";
        return 1;
      }
      if (a.dataset.empty() || a.oracle.empty() || a.out.empty()) {
        std::cerr << "error: --dataset, --oracle and --out are required\n";
        return 1;
      }
      return run_attack(std::move(a));
    }
    if (eval->parsed()) {
      return run_evaluate(e_oracle, e_dataset, e_labels, e_perturbation, e_target,
                          e_holdout_fraction, e_holdout_seed);
    }
    if (audit->parsed()) {
      return run_audit(l_ledger, l_dataset, l_max_images);
    }
    if (make->parsed()) {
      uap::Dataset data;
      if (m_kind == "prototype") {
        uap::PrototypeDataConfig config;
        config.shape = {m_side, m_side, 1};
        config.classes = m_classes;
        config.count = m_count;
        config.seed = m_seed;
        config.contrast = m_contrast;
        config.noise = m_noise;
        config.period = m_period;
        config.quantize = true;
        data = uap::make_prototype_dataset(config);
      } else if (m_kind == "two-gaussian") {
        uap::TwoGaussianConfig config;
        config.shape = {m_side, m_side, 1};
        config.count = m_count;
        config.seed = m_seed;
        config.amplitude = m_amplitude;
        config.noise = m_sigma;
        config.class1_fraction = m_class1;
        data = uap::make_two_gaussian_dataset(config);
      } else {
        std::cerr << "error: --kind must be prototype or two-gaussian\n";
        return 1;
      }
      if (m_format == "idx") {
        uap::write_idx_images(m_images, data);
        uap::write_idx_labels(m_labels, data.labels);
      } else if (m_format == "uapt") {
        uap::write_uapt(m_images, data.shape, data.count, data.pixels);
        uap::write_uapl_labels(m_labels, data.labels);
      } else {
        std::cerr << "error: --format must be idx or uapt\n";
        return 1;
      }
      std::cout << "wrote " << data.count << " images to " << m_images.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
