#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cadam/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "cadam: confidence-masked adaptive optimizers and an online-learning "
      "benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, preset, param, dir, out_dir;
  std::vector<double> values;

  auto* run = app.add_subcommand("run", "run a config end to end");
  run->add_option("config", config_path, "experiment config file (json)")
      ->required();
  run->add_option("--out", out_dir, "override the output directory");

  auto* sweep =
      app.add_subcommand("sweep", "rerun a config over one hyperparameter");
  sweep->add_option("config", config_path, "experiment config file (json)")
      ->required();
  sweep->add_option("--param", param, "hyperparameter to sweep")->required();
  sweep->add_option("--values", values,
                    "values to sweep (default: the per-algorithm lr grid)")
      ->delimiter(',');
  sweep->add_option("--out", out_dir, "override the output directory");

  auto* describe =
      app.add_subcommand("describe", "print a preset's expanded scenario");
  describe->add_option("preset", preset, "preset name")->required();

  auto* plot =
      app.add_subcommand("plot", "re-render SVGs from a results directory");
  plot->add_option("dir", dir, "directory holding run_*.csv files")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cadam::cli::kExitUsage;
  }

  const int workers = cadam::cli::worker_count_from_env();
  const std::optional<std::filesystem::path> out =
      out_dir.empty() ? std::nullopt
                      : std::optional<std::filesystem::path>(out_dir);

  if (run->parsed()) return cadam::cli::cmd_run(config_path, out, workers);
  if (sweep->parsed())
    return cadam::cli::cmd_sweep(config_path, param, values, out, workers);
  if (describe->parsed()) return cadam::cli::cmd_describe(preset);
  return cadam::cli::cmd_plot(dir);
}
