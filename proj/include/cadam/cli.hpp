#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cadam/presets.hpp"
#include "cadam/report.hpp"

namespace cadam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;  // divergence, I/O
inline constexpr int kExitUsage = 2;    // validation, unknown names

inline int worker_count_from_env() {
  const char* env = std::getenv("CADAM_WORKERS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

namespace detail {

inline std::string run_basename(Algorithm alg, std::uint64_t seed) {
  return "run_" + std::string(algorithm_name(alg)) + "_seed" +
         std::to_string(seed) + ".csv";
}

inline void write_records(const ComparisonTable& table,
                          const ExperimentConfig& cfg,
                          const std::filesystem::path& dir) {
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      write_run_csv(table.records[a * cfg.seeds.size() + s],
                    dir / run_basename(cfg.algorithms[a], cfg.seeds[s]));
}

inline int divergence_count(const ComparisonTable& table) {
  int n = 0;
  for (const auto& r : table.records) n += r.diverged;
  return n;
}

inline void render_plots(const ComparisonTable& table,
                         const ExperimentConfig& cfg,
                         const std::filesystem::path& dir) {
  std::vector<RunRecord> ok;
  for (const auto& r : table.records)
    if (!r.diverged) ok.push_back(r);
  if (ok.empty()) return;

  const Objective& obj = cfg.scenario.objective;
  if (std::holds_alternative<MovingMinSpec>(obj) ||
      std::holds_alternative<Landscape2D>(obj)) {
    render_svg(ok, PlotKind::Trajectory2D, dir / "trajectory.svg");
    render_svg(ok, PlotKind::RegretCurve, dir / "regret_curve.svg");
  } else if (std::holds_alternative<ConvexAbsStream>(obj)) {
    render_svg(ok, PlotKind::RegretCurve, dir / "regret_curve.svg");
  } else {
    render_svg(ok, PlotKind::LossCurve, dir / "loss_curve.svg");
    render_svg(ok, PlotKind::AlignmentCurve, dir / "alignment_curve.svg");
  }
}

// lr-alignment-sweep: one comparison per learning rate, one summary row per
// (rate, algorithm).
inline void run_lr_sweep(const ExperimentConfig& cfg,
                         const std::filesystem::path& dir, int workers) {
  std::ofstream out(dir / "lr_sweep.csv", std::ios::binary);
  if (!out)
    throw io_error("cannot open for writing: " + (dir / "lr_sweep.csv").string());
  out << "alpha,algorithm,alignment_mean,auc_mean,final_loss_mean,"
         "cum_regret_mean\n";
  for (double lr : cfg.sweep_lrs) {
    Scenario sc = cfg.scenario;
    sc.hp.alpha = lr;
    const ComparisonTable table =
        compare(sc, cfg.algorithms, cfg.seeds, workers);
    for (const auto& row : table.rows) {
      out << cadam::detail::format_double(lr) << ','
          << algorithm_name(row.algorithm) << ','
          << cadam::detail::format_double(row.alignment_mean) << ','
          << cadam::detail::format_double(row.auc_mean) << ','
          << cadam::detail::format_double(row.final_loss_mean) << ','
          << cadam::detail::format_double(row.cum_regret_mean) << '\n';
    }
  }
}

inline void write_regret_summary(const ComparisonTable& table,
                                 const ExperimentConfig& cfg,
                                 const std::filesystem::path& dir) {
  std::ofstream out(dir / "regret_summary.csv", std::ios::binary);
  out << "algorithm,seed,cum_regret,slope,fit_window_begin,fit_window_end,"
         "regret_over_sqrt_t\n";
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      const RunRecord& rec = table.records[a * cfg.seeds.size() + s];
      if (rec.diverged) continue;
      const RegretSlope slope = regret_slope(rec);
      const double rt = rec.cum_regret.back() /
                        std::sqrt(static_cast<double>(rec.steps_completed));
      out << algorithm_name(cfg.algorithms[a]) << ',' << cfg.seeds[s] << ','
          << cadam::detail::format_double(rec.cum_regret.back()) << ','
          << cadam::detail::format_double(slope.slope) << ',' << slope.t_begin
          << ',' << slope.t_end << ',' << cadam::detail::format_double(rt)
          << '\n';
    }
  }
}

}  // namespace detail

// Expands the config, runs every (algorithm x seed) episode, and writes the
// per-run CSVs, the comparison table, and the preset's plots under the
// output directory.
inline int cmd_run(const std::filesystem::path& config_path,
                   const std::optional<std::filesystem::path>& out_override =
                       std::nullopt,
                   int workers = 1) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (out_override) cfg.output_dir = *out_override;

  try {
    std::filesystem::create_directories(cfg.output_dir);

    if (!cfg.sweep_lrs.empty()) {
      detail::run_lr_sweep(cfg, cfg.output_dir, workers);
      std::cout << "wrote " << (cfg.output_dir / "lr_sweep.csv").string()
                << '\n';
      return kExitOk;
    }

    const ComparisonTable table =
        compare(cfg.scenario, cfg.algorithms, cfg.seeds, workers);
    detail::write_records(table, cfg, cfg.output_dir);
    write_comparison_csv(table, cfg.output_dir / "comparison.csv");
    detail::render_plots(table, cfg, cfg.output_dir);
    if (std::holds_alternative<ConvexAbsStream>(cfg.scenario.objective))
      detail::write_regret_summary(table, cfg, cfg.output_dir);

    const int diverged = detail::divergence_count(table);
    std::cout << "preset " << cfg.preset << ": " << table.records.size()
              << " episodes -> " << cfg.output_dir.string() << '\n';
    if (diverged > 0) {
      std::cerr << "error: " << diverged
                << " episode(s) diverged; partial records written\n";
      return kExitRuntime;
    }
    return kExitOk;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

// Reruns the config once per value of one hyperparameter and appends a
// summary row per (value, algorithm). An empty value list for alpha expands
// to each algorithm's default grid {lr/5, lr/2, lr, 2lr, 5lr}.
inline int cmd_sweep(const std::filesystem::path& config_path,
                     const std::string& param, std::vector<double> values,
                     const std::optional<std::filesystem::path>&
                         out_override = std::nullopt,
                     int workers = 1) {
  static const std::vector<std::string> kParams = {
      "alpha", "beta1", "beta2", "epsilon", "lambda", "weight_decay",
      "momentum"};
  if (std::find(kParams.begin(), kParams.end(), param) == kParams.end()) {
    std::cerr << "error: unknown sweep parameter '" << param
              << "'; recognized:";
    for (const auto& p : kParams) std::cerr << ' ' << p;
    std::cerr << '\n';
    return kExitUsage;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (out_override) cfg.output_dir = *out_override;

  const bool default_grid = values.empty();
  if (default_grid && param != "alpha") {
    std::cerr << "error: empty value list (only alpha has a default grid)\n";
    return kExitUsage;
  }

  try {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir / "sweep_summary.csv", std::ios::binary);
    if (!out) throw io_error("cannot open sweep_summary.csv");
    out << param
        << ",algorithm,n_seeds,n_diverged,final_loss_mean,cum_regret_mean,"
           "alignment_mean,auc_mean\n";

    int diverged_total = 0;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      const Algorithm alg = cfg.algorithms[a];
      const std::vector<double> vals =
          default_grid ? default_lr_grid(alg) : values;
      for (double v : vals) {
        Scenario sc = cfg.scenario;
        sc.hp.algorithm = alg;
        if (param == "alpha") sc.hp.alpha = v;
        else if (param == "beta1") sc.hp.beta1 = v;
        else if (param == "beta2") sc.hp.beta2 = v;
        else if (param == "epsilon") sc.hp.epsilon = v;
        else if (param == "lambda") sc.hp.lambda = v;
        else if (param == "weight_decay") sc.hp.weight_decay = v;
        else if (param == "momentum") sc.hp.momentum = v;
        sc.hp.validate();

        const Algorithm one[] = {alg};
        const ComparisonTable table = compare(sc, one, cfg.seeds, workers);
        const ComparisonRow& row = table.rows.front();
        diverged_total += row.n_diverged;
        out << cadam::detail::format_double(v) << ',' << algorithm_name(alg)
            << ',' << row.n_seeds << ',' << row.n_diverged << ','
            << cadam::detail::format_double(row.final_loss_mean) << ','
            << cadam::detail::format_double(row.cum_regret_mean) << ','
            << cadam::detail::format_double(row.alignment_mean) << ','
            << cadam::detail::format_double(row.auc_mean) << '\n';
      }
    }
    std::cout << "wrote " << (cfg.output_dir / "sweep_summary.csv").string()
              << '\n';
    if (diverged_total > 0) {
      std::cerr << "error: " << diverged_total << " episode(s) diverged\n";
      return kExitRuntime;
    }
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

// Prints the fully expanded scenario behind a preset name.
inline int cmd_describe(const std::string& preset) {
  try {
    const ExperimentConfig cfg = expand_preset(preset);
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return kExitOk;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

// Re-renders curve SVGs from the run CSVs in a results directory.
inline int cmd_plot(const std::filesystem::path& dir) {
  try {
    if (!std::filesystem::is_directory(dir)) {
      std::cerr << "error: not a directory: " << dir.string() << '\n';
      return kExitUsage;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("run_") && name.ends_with(".csv"))
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "error: no run_*.csv files in " << dir.string() << '\n';
      return kExitRuntime;
    }

    std::vector<RunRecord> records;
    for (const auto& f : files) {
      RunRecord rec = read_run_csv(f);
      // color series by the algorithm encoded in the filename
      const std::string stem = f.stem().string();  // run_<alg>_seed<k>
      const auto second = stem.find('_', 4);
      if (second != std::string::npos) {
        if (const auto alg = parse_algorithm(stem.substr(4, second - 4)))
          rec.scenario.hp.algorithm = *alg;
      }
      records.push_back(std::move(rec));
    }
    render_svg(records, PlotKind::LossCurve, dir / "loss_curve.svg");
    render_svg(records, PlotKind::RegretCurve, dir / "regret_curve.svg");
    render_svg(records, PlotKind::AlignmentCurve, dir / "alignment_curve.svg");
    const std::size_t dim0 = records.front().traj_dim;
    bool trajectories = dim0 >= 1 && dim0 <= 2;
    for (const auto& r : records)
      trajectories = trajectories && r.traj_dim == dim0;
    if (trajectories)
      render_svg(records, PlotKind::Trajectory2D, dir / "trajectory.svg");
    std::cout << "rendered plots for " << files.size() << " run(s) in "
              << dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace cadam::cli
