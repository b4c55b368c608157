#include "uap/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "uap/errors.hpp"
#include "uap/io.hpp"
#include "uap/train.hpp"
#include "uap/yoqo.hpp"
#include "uap/yoqt.hpp"

namespace uap {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "algorithm", "tile_size",  "population",       "batch",        "directions",
      "iterations", "epsilon",   "sigma0",           "mu",           "eta",
      "basis",      "target_class", "seed",          "repetitions",  "holdout_fraction",
      "holdout_seed", "fidelity_pick", "dataset",    "labels",       "oracle",
      "out"};
  return keys;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw std::invalid_argument("config: cannot parse " + key + " value '" + value + "'");
  }
  return out;
}

BasisKind basis_from_name(const std::string& name) {
  if (name == "fft") return BasisKind::FftLowFrequency;
  if (name == "canonical") return BasisKind::Canonical;
  if (name == "random") return BasisKind::RandomNormal;
  throw std::invalid_argument("config: unknown basis '" + name + "'");
}

AttackObjective objective_of(const ExperimentConfig& config) {
  AttackObjective objective;
  if (config.target_class >= 0) {
    objective.mode = AttackMode::Targeted;
    objective.target_class = config.target_class;
  }
  return objective;
}

std::string canonical_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "algorithm=" << c.algorithm << "\n"
      << "basis=" << c.basis << "\n"
      << "batch=" << c.batch << "\n"
      << "dataset=" << c.dataset.string() << "\n"
      << "directions=" << c.directions << "\n"
      << "epsilon=" << format_double(c.epsilon) << "\n"
      << "eta=" << format_double(c.eta) << "\n"
      << "fidelity_pick=" << (c.fidelity_pick ? 1 : 0) << "\n"
      << "holdout_fraction=" << format_double(c.holdout_fraction) << "\n"
      << "holdout_seed=" << c.holdout_seed << "\n"
      << "iterations=" << c.iterations << "\n"
      << "labels=" << c.labels.string() << "\n"
      << "mu=" << format_double(c.mu) << "\n"
      << "oracle=" << c.oracle.string() << "\n"
      << "population=" << c.population << "\n"
      << "repetitions=" << c.repetitions << "\n"
      << "seed=" << c.seed << "\n"
      << "sigma0=" << format_double(c.sigma0) << "\n"
      << "target_class=" << c.target_class << "\n"
      << "tile_size=" << c.tile_size << "\n";
  return out.str();
}

nlohmann::ordered_json evaluation_to_json(const EvaluationResult& eval) {
  nlohmann::ordered_json j;
  j["mode"] = eval.mode == AttackMode::Untargeted ? "untargeted" : "targeted";
  j["target_class"] = eval.target_class;
  j["eligible_count"] = eval.eligible_count;
  j["success_count"] = eval.success_count;
  j["success_rate"] = eval.success_rate;
  j["eligible_by_clean_class"] = eval.eligible_by_clean_class;
  j["success_by_clean_class"] = eval.success_by_clean_class;
  return j;
}

}  // namespace

std::map<std::string, std::string> parse_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string(), 0);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config " + path.string() + " line " +
                                  std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config " + path.string() + " line " +
                                  std::to_string(line_no) + ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

ExperimentConfig config_from_keys(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  for (const auto& [key, value] : kv) {
    if (!known_keys().count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    if (key == "algorithm") c.algorithm = value;
    else if (key == "tile_size") c.tile_size = parse_number<int>(key, value);
    else if (key == "population") c.population = parse_number<int>(key, value);
    else if (key == "batch") c.batch = parse_number<int>(key, value);
    else if (key == "directions") c.directions = parse_number<int>(key, value);
    else if (key == "iterations") c.iterations = parse_number<int>(key, value);
    else if (key == "epsilon") c.epsilon = parse_number<double>(key, value);
    else if (key == "sigma0") c.sigma0 = parse_number<double>(key, value);
    else if (key == "mu") c.mu = parse_number<double>(key, value);
    else if (key == "eta") c.eta = parse_number<double>(key, value);
    else if (key == "basis") c.basis = value;
    else if (key == "target_class") c.target_class = parse_number<int>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "repetitions") c.repetitions = parse_number<int>(key, value);
    else if (key == "holdout_fraction") c.holdout_fraction = parse_number<double>(key, value);
    else if (key == "holdout_seed") c.holdout_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "fidelity_pick") c.fidelity_pick = parse_number<int>(key, value) != 0;
    else if (key == "dataset") c.dataset = value;
    else if (key == "labels") c.labels = value;
    else if (key == "oracle") c.oracle = value;
    else if (key == "out") c.out = value;
  }
  if (c.algorithm != "yoqo" && c.algorithm != "yoqt") {
    throw std::invalid_argument("config: algorithm must be 'yoqo' or 'yoqt'");
  }
  if (c.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
  basis_from_name(c.basis);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return config_from_keys(parse_key_value_file(path));
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string text = canonical_config_text(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  Dataset data = load_images_auto(config.dataset);
  if (!config.labels.empty()) {
    data.labels = load_labels_auto(config.labels);
    validate_dataset(data);
  }
  const AttackObjective objective = objective_of(config);
  if (objective.mode == AttackMode::Untargeted && !data.labeled()) {
    throw std::invalid_argument("run_experiment: untargeted attacks need a labels file");
  }
  const FeedForwardModel model = load_model(config.oracle);
  const HoldoutSplit split = split_holdout(data.count, config.holdout_fraction,
                                           config.holdout_seed);

  std::filesystem::create_directories(config.out);
  ExperimentResult result;
  if (data.labeled()) {
    result.holdout_accuracy = accuracy(model, data, split.holdout_ids);
  }

  const std::set<int> holdout_set(split.holdout_ids.begin(), split.holdout_ids.end());
  std::ofstream summary(config.out / "summary.jsonl", std::ios::trunc);
  std::ofstream timings(config.out / "timings.jsonl", std::ios::trunc);

  for (int r = 0; r < config.repetitions; ++r) {
    const std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(r);
    DatasetStream stream(data, split.attack_ids, run_seed);
    FeedForwardOracle attack_oracle(model);

    AttackOutcome outcome = [&] {
      if (config.algorithm == "yoqo") {
        YoqoConfig yc;
        yc.tile_side = config.tile_size;
        yc.population_size = config.population;
        yc.batch_size = config.batch;
        yc.max_generations = config.iterations;
        yc.epsilon = config.epsilon;
        yc.initial_step = config.sigma0;
        yc.objective = objective;
        yc.seed = run_seed;
        yc.fidelity_pick = config.fidelity_pick;
        return run_yoqo(attack_oracle, stream, yc);
      }
      YoqtConfig yc;
      yc.tile_side = config.tile_size;
      yc.batch_size = config.batch;
      yc.directions_per_step = config.directions;
      yc.max_iterations = config.iterations;
      yc.smoothing = config.mu;
      yc.step_size = config.eta;
      yc.epsilon = config.epsilon;
      yc.basis = basis_from_name(config.basis);
      yc.basis_seed = run_seed;
      yc.objective = objective;
      yc.seed = run_seed;
      return run_yoqt(attack_oracle, stream, yc);
    }();

    if (outcome.report.total_queries != attack_oracle.query_counter()) {
      throw std::logic_error("run " + std::to_string(r) +
                             ": ledger and oracle query counts disagree");
    }
    for (std::int64_t id : outcome.ledger.queried_image_ids()) {
      if (holdout_set.count(static_cast<int>(id))) {
        throw std::logic_error("run " + std::to_string(r) +
                               ": attack queried holdout image " + std::to_string(id));
      }
    }

    FeedForwardOracle eval_oracle(model);
    EvaluationResult eval =
        objective.mode == AttackMode::Untargeted
            ? evaluate_untargeted(eval_oracle, outcome.perturbation, data, split.holdout_ids)
            : evaluate_targeted(eval_oracle, outcome.perturbation, data, split.holdout_ids,
                                objective.target_class);

    const std::filesystem::path run_dir =
        config.out / ("run_" + std::to_string(r));
    std::filesystem::create_directories(run_dir);
    write_perturbation(run_dir / "perturbation.uapt", outcome.perturbation);
    write_ledger(run_dir / "ledger.jsonl", outcome.ledger);
    {
      std::ofstream rep(run_dir / "report.json", std::ios::trunc);
      rep << report_to_json(outcome.report, /*include_volatile=*/false) << "\n";
    }
    {
      nlohmann::ordered_json meta;
      meta["algorithm"] = config.algorithm;
      meta["config_hash"] = config_hash(config);
      meta["base_seed"] = config.seed;
      meta["run_index"] = r;
      meta["run_seed"] = run_seed;
      meta["epsilon"] = config.epsilon;
      meta["images_consumed"] = outcome.report.images_consumed;
      meta["total_queries"] = outcome.report.total_queries;
      meta["evaluation"] = evaluation_to_json(eval);
      std::ofstream out(run_dir / "metadata.json", std::ios::trunc);
      out << meta.dump(2) << "\n";
    }
    timings << nlohmann::ordered_json{{"run_index", r},
                                      {"wall_time_ms", outcome.report.wall_time_ms}}
                   .dump()
            << "\n";
    {
      nlohmann::ordered_json line;
      line["run_index"] = r;
      line["seed"] = run_seed;
      line["success_rate"] = eval.success_rate;
      line["eligible_count"] = eval.eligible_count;
      line["success_count"] = eval.success_count;
      line["images_consumed"] = outcome.report.images_consumed;
      line["total_queries"] = outcome.report.total_queries;
      summary << line.dump() << "\n";
    }
    if (log) {
      (*log) << "run " << r << ": success_rate=" << format_double(eval.success_rate)
             << " images=" << outcome.report.images_consumed
             << " queries=" << outcome.report.total_queries << "\n";
    }

    result.success_rates.push_back(eval.success_rate);
    RunRecord record;
    record.run_index = r;
    record.seed = run_seed;
    record.report = std::move(outcome.report);
    record.evaluation = std::move(eval);
    result.runs.push_back(std::move(record));
  }

  result.median_success_rate = median_of(result.success_rates);
  nlohmann::ordered_json final_line;
  final_line["median_success_rate"] = result.median_success_rate;
  final_line["success_rates"] = result.success_rates;
  final_line["holdout_accuracy"] = result.holdout_accuracy;
  final_line["config_hash"] = config_hash(config);
  summary << final_line.dump() << "\n";
  if (log) {
    (*log) << "median success_rate=" << format_double(result.median_success_rate) << "\n";
  }
  return result;
}

}  // namespace uap
