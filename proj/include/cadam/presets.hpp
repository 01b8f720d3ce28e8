#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cadam/errors.hpp"
#include "cadam/stream.hpp"

namespace cadam {

// A declarative experiment: a named preset expanded to a fully-specified
// scenario, plus the algorithm and seed lists and the output directory.
// Explicit config fields override the preset's defaults.
struct ExperimentConfig {
  std::string preset;
  std::string description;
  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";
  Scenario scenario;
  std::vector<double> sweep_lrs;  // lr-alignment-sweep only
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "shift-sudden",  "shift-linear", "shift-sinusoidal",
      "noise-2d",      "regret-check", "ctr-clean",
      "ctr-noisy",     "lr-alignment-sweep"};
  return names;
}

inline ExperimentConfig expand_preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.preset = name;
  cfg.algorithms = {Algorithm::Adam, Algorithm::CAdam};
  cfg.seeds = {1, 2, 3};

  const auto shift_common = [&](Schedule schedule) {
    MovingMinSpec mm;
    mm.norm = Norm::L1;
    mm.schedule = schedule;
    mm.period = 40;
    cfg.scenario.objective = mm;
    cfg.scenario.horizon = 100;
    cfg.scenario.hp = HyperParams{};
    cfg.scenario.hp.alpha = 0.5;
    cfg.seeds = {1, 2, 3, 4, 5};
  };
  const auto ctr_common = [&](double noise_rate) {
    ModelTask task;
    task.model = ModelKind::Logistic;
    task.loss = LossKind::LogLoss;
    task.stream.n_steps = 2000;
    task.stream.batch_size = 64;
    task.stream.feature_dim = 256;  // sparse regime: features recur rarely
    task.stream.sparsity = 4;
    task.stream.label_noise_rate = noise_rate;
    cfg.scenario.objective = task;
    cfg.scenario.horizon = task.stream.n_steps;
    cfg.scenario.hp = HyperParams{};
    cfg.scenario.hp.alpha = 0.1;
  };

  if (name == "shift-sudden") {
    shift_common(Schedule::Sudden);
    cfg.description =
        "1-d moving-minimum tracking; the optimum jumps between 0 and 1 "
        "every 40 steps; compares cumulative tracking regret.";
  } else if (name == "shift-linear") {
    shift_common(Schedule::Linear);
    cfg.description =
        "1-d moving-minimum tracking; the optimum drifts at constant speed "
        "t/40; compares cumulative tracking regret.";
  } else if (name == "shift-sinusoidal") {
    shift_common(Schedule::Sinusoidal);
    cfg.description =
        "1-d moving-minimum tracking; the optimum oscillates sinusoidally "
        "with period 40; compares cumulative tracking regret.";
  } else if (name == "noise-2d") {
    cfg.scenario.objective = Landscape2D{LandscapeId::SepL1};
    cfg.scenario.horizon = 1500;
    cfg.scenario.hp = HyperParams{};
    cfg.scenario.hp.alpha = 0.1;
    NoiseSpec noise;
    noise.p = 0.5;
    cfg.scenario.noise = noise;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.description =
        "2-d landscape descent with per-dimension gradient corruption "
        "(each component rescaled by U(-1,1) with probability 0.5, shared "
        "across optimizers); compares final distance to the optimum and "
        "cumulative regret.";
  } else if (name == "regret-check") {
    cfg.scenario.objective = ConvexAbsStream{};
    cfg.scenario.horizon = 100000;
    cfg.scenario.hp = defaults_for(Algorithm::CAmsGrad);
    cfg.scenario.hp.alpha = 0.1;
    cfg.scenario.hp.lr_schedule = LrSchedule::InvSqrt;
    cfg.scenario.hp.lambda = 0.99;
    cfg.algorithms = {Algorithm::CAmsGrad};
    cfg.seeds = {1};
    cfg.description =
        "sublinear-regret check on a stream of random a|x-c| losses with "
        "lr alpha/sqrt(t) and decaying momentum coefficient; reports the "
        "log-log slope of cumulative regret over the second half.";
  } else if (name == "ctr-clean") {
    ctr_common(0.0);
    cfg.description =
        "online logistic click stream (sparse features, prequential "
        "evaluation); clean training labels.";
  } else if (name == "ctr-noisy") {
    ctr_common(0.01);
    cfg.description =
        "online logistic click stream with 1% of negative training labels "
        "flipped to positive; measures the prequential AUC drop versus "
        "clean training.";
  } else if (name == "lr-alignment-sweep") {
    ctr_common(0.0);
    cfg.algorithms = {Algorithm::Adam};
    cfg.seeds = {1};
    cfg.sweep_lrs = {0.001, 0.0014, 0.002, 0.0027,
                     0.0037, 0.0052, 0.0072, 0.01};
    cfg.description =
        "sweeps the learning rate over one decade on the clean click "
        "stream; one summary row per rate with the mean alignment ratio.";
  } else {
    std::string msg = "unknown preset '" + name + "'; valid presets:";
    for (const auto& p : preset_names()) msg += " " + p;
    throw config_error(msg);
  }
  return cfg;
}

namespace detail {

inline Norm parse_norm(const std::string& s) {
  if (s == "l1") return Norm::L1;
  if (s == "l2") return Norm::L2;
  throw config_error("unknown norm '" + s + "' (expected l1 or l2)");
}

inline Schedule parse_schedule(const std::string& s) {
  if (s == "sudden") return Schedule::Sudden;
  if (s == "linear") return Schedule::Linear;
  if (s == "sinusoidal") return Schedule::Sinusoidal;
  throw config_error("unknown schedule '" + s + "'");
}

inline LandscapeId parse_landscape(const std::string& s) {
  if (s == "sep-l1") return LandscapeId::SepL1;
  if (s == "insep-l1") return LandscapeId::InsepL1;
  if (s == "insep-l2") return LandscapeId::InsepL2;
  if (s == "rosenbrock") return LandscapeId::Rosenbrock;
  throw config_error("unknown landscape '" + s +
                     "' (sep-l1, insep-l1, insep-l2, rosenbrock)");
}

inline DriftKind parse_drift(const std::string& s) {
  if (s == "none") return DriftKind::None;
  if (s == "sudden-flip") return DriftKind::SuddenFlip;
  if (s == "rotating") return DriftKind::RotatingWeights;
  throw config_error("unknown drift '" + s + "'");
}

inline ModelKind parse_model(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "logistic") return ModelKind::Logistic;
  if (s == "mlp") return ModelKind::Mlp;
  throw config_error("unknown model '" + s + "'");
}

template <class T, class Obj>
T* objective_as(Obj& objective, const std::string& key) {
  T* p = std::get_if<T>(&objective);
  if (!p)
    throw config_error("override '" + key +
                       "' does not apply to this preset's objective");
  return p;
}

inline void apply_override(ExperimentConfig& cfg, const std::string& key,
                           const nlohmann::json& value) {
  Scenario& sc = cfg.scenario;
  HyperParams& hp = sc.hp;
  if (key == "alpha") hp.alpha = value.get<double>();
  else if (key == "beta1") hp.beta1 = value.get<double>();
  else if (key == "beta2") hp.beta2 = value.get<double>();
  else if (key == "epsilon") hp.epsilon = value.get<double>();
  else if (key == "lambda") hp.lambda = value.get<double>();
  else if (key == "weight_decay") hp.weight_decay = value.get<double>();
  else if (key == "momentum") hp.momentum = value.get<double>();
  else if (key == "lr_schedule") {
    const auto s = value.get<std::string>();
    if (s == "constant") hp.lr_schedule = LrSchedule::Constant;
    else if (s == "inv_sqrt") hp.lr_schedule = LrSchedule::InvSqrt;
    else throw config_error("unknown lr_schedule '" + s + "'");
  } else if (key == "sparse_correction") {
    const auto s = value.get<std::string>();
    if (s == "per_dimension") hp.sparse_correction = SparseCorrection::PerDimension;
    else if (s == "global_step") hp.sparse_correction = SparseCorrection::GlobalStep;
    else throw config_error("unknown sparse_correction '" + s + "'");
  } else if (key == "horizon") {
    sc.horizon = value.get<std::int64_t>();
    if (auto* task = std::get_if<ModelTask>(&sc.objective))
      task->stream.n_steps = std::max(task->stream.n_steps, sc.horizon);
  } else if (key == "init") {
    sc.init = value.get<std::vector<double>>();
  } else if (key == "record_trajectory") {
    sc.record_trajectory = value.get<bool>();
  } else if (key == "norm") {
    objective_as<MovingMinSpec>(sc.objective, key)->norm =
        parse_norm(value.get<std::string>());
  } else if (key == "schedule") {
    objective_as<MovingMinSpec>(sc.objective, key)->schedule =
        parse_schedule(value.get<std::string>());
  } else if (key == "period") {
    objective_as<MovingMinSpec>(sc.objective, key)->period =
        value.get<std::int64_t>();
  } else if (key == "landscape") {
    objective_as<Landscape2D>(sc.objective, key)->id =
        parse_landscape(value.get<std::string>());
  } else if (key == "rosenbrock_a") {
    objective_as<Landscape2D>(sc.objective, key)->a = value.get<double>();
  } else if (key == "rosenbrock_b") {
    const double b = value.get<double>();
    if (!(b > 0.0)) throw config_error("rosenbrock_b must be > 0");
    objective_as<Landscape2D>(sc.objective, key)->b = b;
  } else if (key == "noise_p") {
    if (!sc.noise) sc.noise.emplace();
    sc.noise->p = value.get<double>();
    if (!(sc.noise->p >= 0.0 && sc.noise->p <= 1.0))
      throw config_error("noise_p must be in [0,1]");
  } else if (key == "noise_seed") {
    if (!sc.noise) sc.noise.emplace();
    sc.noise->seed = value.get<std::uint64_t>();
  } else if (key == "model") {
    objective_as<ModelTask>(sc.objective, key)->model =
        parse_model(value.get<std::string>());
  } else if (key == "hidden_width") {
    objective_as<ModelTask>(sc.objective, key)->hidden_width =
        value.get<std::int64_t>();
  } else if (key == "loss") {
    const auto s = value.get<std::string>();
    auto* task = objective_as<ModelTask>(sc.objective, key);
    if (s == "logloss") task->loss = LossKind::LogLoss;
    else if (s == "squared") task->loss = LossKind::Squared;
    else throw config_error("unknown loss '" + s + "'");
  } else if (key == "batch_size") {
    objective_as<ModelTask>(sc.objective, key)->stream.batch_size =
        value.get<std::int64_t>();
  } else if (key == "feature_dim") {
    objective_as<ModelTask>(sc.objective, key)->stream.feature_dim =
        value.get<std::int64_t>();
  } else if (key == "sparsity") {
    objective_as<ModelTask>(sc.objective, key)->stream.sparsity =
        value.get<std::int64_t>();
  } else if (key == "drift") {
    objective_as<ModelTask>(sc.objective, key)->stream.drift =
        parse_drift(value.get<std::string>());
  } else if (key == "drift_period") {
    objective_as<ModelTask>(sc.objective, key)->stream.drift_period =
        value.get<std::int64_t>();
  } else if (key == "drift_rate") {
    objective_as<ModelTask>(sc.objective, key)->stream.drift_rate =
        value.get<double>();
  } else if (key == "label_noise_rate") {
    auto* task = objective_as<ModelTask>(sc.objective, key);
    task->stream.label_noise_rate = value.get<double>();
    if (task->stream.label_noise_rate < 0.0 ||
        task->stream.label_noise_rate > 1.0)
      throw config_error("label_noise_rate must be in [0,1]");
  } else if (key == "stream_seed") {
    objective_as<ModelTask>(sc.objective, key)->stream.seed =
        value.get<std::uint64_t>();
  } else if (key == "sweep_lrs") {
    cfg.sweep_lrs = value.get<std::vector<double>>();
  } else {
    throw config_error("unrecognized override key '" + key + "'");
  }
}

}  // namespace detail

// Loads and validates a declarative experiment file:
//   { "preset": "...", "algorithms": [...], "seeds": [...],
//     "output_dir": "...", "overrides": { ... } }
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("malformed config " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("preset"))
    throw config_error("config must be an object with a 'preset' field");

  ExperimentConfig cfg = expand_preset(j.at("preset").get<std::string>());
  try {
    if (j.contains("algorithms")) {
      cfg.algorithms.clear();
      for (const auto& name : j.at("algorithms")) {
        const auto alg = parse_algorithm(name.get<std::string>());
        if (!alg) {
          std::string msg = "unknown algorithm '" + name.get<std::string>() +
                            "'; valid names:";
          for (Algorithm a : kAllAlgorithms)
            msg += " " + std::string(algorithm_name(a));
          throw config_error(msg);
        }
        cfg.algorithms.push_back(*alg);
      }
      if (cfg.algorithms.empty())
        throw config_error("algorithms list must not be empty");
    }
    if (j.contains("seeds")) {
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      if (cfg.seeds.empty()) throw config_error("seeds list must not be empty");
    }
    if (j.contains("output_dir"))
      cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("overrides")) {
      const auto& ov = j.at("overrides");
      if (!ov.is_object()) throw config_error("'overrides' must be an object");
      for (auto it = ov.begin(); it != ov.end(); ++it)
        detail::apply_override(cfg, it.key(), it.value());
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error("malformed config " + path.string() + ": " + e.what());
  }
  cfg.scenario.hp.validate();
  return cfg;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  if (const auto* mm = std::get_if<MovingMinSpec>(&sc.objective)) {
    j["objective"] = {
        {"kind", "moving-min"},
        {"norm", mm->norm == Norm::L1 ? "l1" : "l2"},
        {"schedule", mm->schedule == Schedule::Sudden       ? "sudden"
                     : mm->schedule == Schedule::Linear     ? "linear"
                                                            : "sinusoidal"},
        {"period", mm->period}};
  } else if (const auto* ls = std::get_if<Landscape2D>(&sc.objective)) {
    static constexpr std::array<std::string_view, 4> names = {
        "sep-l1", "insep-l1", "insep-l2", "rosenbrock"};
    j["objective"] = {{"kind", "landscape-2d"},
                      {"landscape", names[static_cast<std::size_t>(ls->id)]},
                      {"a", ls->a},
                      {"b", ls->b}};
  } else if (const auto* cs = std::get_if<ConvexAbsStream>(&sc.objective)) {
    j["objective"] = {{"kind", "convex-abs-stream"},
                      {"slope_lo", cs->slope_lo},
                      {"slope_hi", cs->slope_hi},
                      {"center_lo", cs->center_lo},
                      {"center_hi", cs->center_hi}};
  } else {
    const auto& task = std::get<ModelTask>(sc.objective);
    j["objective"] = {
        {"kind", "click-stream"},
        {"model", task.model == ModelKind::Linear     ? "linear"
                  : task.model == ModelKind::Logistic ? "logistic"
                                                      : "mlp"},
        {"hidden_width", task.hidden_width},
        {"loss", task.loss == LossKind::LogLoss ? "logloss" : "squared"},
        {"batch_size", task.stream.batch_size},
        {"feature_dim", task.stream.feature_dim},
        {"sparsity", task.stream.sparsity},
        {"drift", task.stream.drift == DriftKind::None ? "none"
                  : task.stream.drift == DriftKind::SuddenFlip
                      ? "sudden-flip"
                      : "rotating"},
        {"drift_period", task.stream.drift_period},
        {"drift_rate", task.stream.drift_rate},
        {"label_noise_rate", task.stream.label_noise_rate},
        {"stream_seed", task.stream.seed}};
  }
  j["horizon"] = sc.horizon;
  j["record_trajectory"] = sc.record_trajectory;
  if (sc.init.empty())
    j["init"] = "auto (seeded for 1-d objectives, fixed start otherwise)";
  else
    j["init"] = sc.init;
  if (sc.noise)
    j["noise"] = {{"p", sc.noise->p}, {"seed", sc.noise->seed}};
  const HyperParams& hp = sc.hp;
  j["hyperparams"] = {
      {"alpha", hp.alpha},
      {"beta1", hp.beta1},
      {"beta2", hp.beta2},
      {"epsilon", hp.epsilon},
      {"lambda", hp.lambda},
      {"lr_schedule",
       hp.lr_schedule == LrSchedule::Constant ? "constant" : "inv_sqrt"},
      {"weight_decay", hp.weight_decay},
      {"momentum", hp.momentum},
      {"sparse_correction",
       hp.sparse_correction == SparseCorrection::PerDimension
           ? "per_dimension"
           : "global_step"}};
  return j;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["preset"] = cfg.preset;
  j["description"] = cfg.description;
  std::vector<std::string> algs;
  for (Algorithm a : cfg.algorithms)
    algs.emplace_back(algorithm_name(a));
  j["algorithms"] = algs;
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir.string();
  j["scenario"] = scenario_to_json(cfg.scenario);
  if (!cfg.sweep_lrs.empty()) j["sweep_lrs"] = cfg.sweep_lrs;
  return j;
}

}  // namespace cadam
