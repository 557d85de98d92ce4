#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pdmmlab/pdmm.hpp"
#include "pdmmlab/privacy.hpp"

namespace pdmmlab {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitCheckFailure = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphSpec {
  bool from_file = false;
  std::string file;
  int n = 10;
  double radius = 0;  // 0: sqrt(2 ln n / n)
  int max_attempts = 100;
};

struct ModelSpec {
  enum class Type { Consensus, LinearRegression };
  Type type = Type::Consensus;
  int d = 1;
  double s_sigma2 = 1.0;
  int rows = 2;  // linreg: design rows per node
};

struct EnsembleCfg {
  int runs = 300;
  double sigma_z2 = 1e8;
  ScheduleMode mode = ScheduleMode::FixedAcrossRuns;
  std::vector<int> record_rounds;  // empty: per-command default
  double slack = -1;               // <0: default_bound_slack(runs)
};

struct MiCfg {
  int runs = 500;
  int target_node = -1;      // -1: lowest-degree node
  int honest_neighbor = -1;  // -1: smallest-index neighbor of the target
  std::vector<double> sigma_z2 = {0.5, 1.0};
  std::vector<int> record_rounds;  // empty: 0..30 step 2
};

struct BoundCfg {
  double sigma2 = 1.0;
  double theta = -1;        // <0: pdmm theta
  double mu = -1;           // <0: scheme-implied (1/n async, 1 sync)
  std::vector<int> ks;      // empty: 0..50 step 5
};

struct RunCfg {
  int iterations = 100;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0: OpenMP default
  GraphSpec graph;
  ModelSpec model;
  double c = 0.5;
  double theta = 0.5;
  Scheme scheme = Scheme::AsyncUniformNode;
  EnsembleCfg ensemble;
  MiCfg mi;
  BoundCfg bound;
  RunCfg run;
  std::string out_dir = "out";
  std::string id = "exp";
  std::string config_hash;  // over the effective config, overrides applied
};

// Parses the JSON config; unknown keys are rejected. Overrides are applied
// before hashing so reruns with identical flags hash identically.
ExperimentConfig load_experiment_config(const std::string& path,
                                        std::optional<std::uint64_t> seed_override = {},
                                        std::optional<std::string> out_override = {},
                                        std::optional<int> threads_override = {});
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         std::optional<std::uint64_t> seed_override = {},
                                         std::optional<std::string> out_override = {},
                                         std::optional<int> threads_override = {});

int cmd_fig1(const ExperimentConfig& cfg, std::ostream& log);
int cmd_fig2(const ExperimentConfig& cfg, std::ostream& log);
int cmd_fig3(const ExperimentConfig& cfg, std::ostream& log);
int cmd_bound(const ExperimentConfig& cfg, std::ostream& log);
int cmd_run(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace pdmmlab
