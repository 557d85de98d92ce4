#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "pdmmlab/experiments.hpp"

using namespace pdmmlab;

int main(int argc, char** argv) {
  CLI::App app{"pdmmlab: PDMM consensus simulator with subspace-perturbation privacy analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;

  int (*handler)(const ExperimentConfig&, std::ostream&) = nullptr;
  const std::pair<const char*, int (*)(const ExperimentConfig&, std::ostream&)> commands[] = {
      {"fig1", &cmd_fig1}, {"fig2", &cmd_fig2}, {"fig3", &cmd_fig3},
      {"bound", &cmd_bound}, {"run", &cmd_run}};
  const char* descriptions[] = {
      "x convergence and subspace variances vs iteration (async, theta sweep)",
      "Var(Z_psi_perp) vs bound for sync and async schemes",
      "mutual information between private data and the adversary observation",
      "evaluate the variance lower-bound curve and projector diagnostics",
      "single PDMM run; exports init, transcript and trajectory CSVs"};

  int idx = 0;
  for (auto [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, descriptions[idx++]);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", [&seed](const CLI::results_t& r) {
      try {
        seed = std::stoull(r[0]);
        return true;
      } catch (const std::exception&) {
        return false;
      }
    }, "master seed override");
    sub->add_option("--out", [&out_dir](const CLI::results_t& r) {
      out_dir = r[0];
      return true;
    }, "output directory override");
    sub->add_option("--threads", [&threads](const CLI::results_t& r) {
      try {
        threads = std::stoi(r[0]);
        return true;
      } catch (const std::exception&) {
        return false;
      }
    }, "ensemble worker threads (0 = OpenMP default, 1 = serial)");
    sub->callback([&handler, fn = fn]() { handler = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;  // --help stays success
  }

  try {
    const ExperimentConfig cfg = load_experiment_config(config_path, seed, out_dir, threads);
    return handler(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
