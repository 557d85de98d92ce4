#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pdmmlab/csv.hpp"
#include "pdmmlab/experiments.hpp"

using namespace pdmmlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("pdmmlab_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string minimal_config(const std::string& extra = "") {
  return R"({"seed": 11, "graph": {"n": 6, "radius": 0.9})" + extra + "}";
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, hash stability") {
  const ExperimentConfig cfg = parse_experiment_config(minimal_config());
  CHECK(cfg.seed == 11);
  CHECK(cfg.graph.n == 6);
  CHECK(cfg.c == 0.5);
  CHECK(cfg.scheme == Scheme::AsyncUniformNode);

  const ExperimentConfig a = parse_experiment_config(minimal_config());
  CHECK(a.config_hash == cfg.config_hash);

  const ExperimentConfig b = parse_experiment_config(minimal_config(), 99);
  CHECK(b.seed == 99);
  CHECK(b.config_hash != cfg.config_hash);

  const ExperimentConfig c = parse_experiment_config(minimal_config(), 11);
  CHECK(c.config_hash == cfg.config_hash);  // override equal to the file value

  const ExperimentConfig d = parse_experiment_config(minimal_config(), {}, "elsewhere", 4);
  CHECK(d.out_dir == "elsewhere");
  CHECK(d.threads == 4);
}

TEST_CASE("config parsing: unknown keys and bad values fail fast") {
  CHECK_THROWS_AS(parse_experiment_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"graph": {"n": 5}, "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"graph": {"n": 5, "color": "red"}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"graph": {"n": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"seed": 1})"), ConfigError);  // graph required
  CHECK_THROWS_AS(parse_experiment_config(minimal_config(R"(, "pdmm": {"theta": 0.0})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(minimal_config(R"(, "pdmm": {"c": -1})")), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(minimal_config(R"(, "pdmm": {"scheme": "gossip"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(minimal_config(R"(, "ensemble": {"runs": 1})")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config(minimal_config(R"(, "ensemble": {"schedule_mode": "maybe"})")),
      ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"graph": {"file": "g.txt", "n": 4}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(minimal_config(R"(, "model": {"type": "svm"})")),
                  ConfigError);
}

TEST_CASE("format_double is round-trip exact and stable") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  const double v = 0.12345678901234567;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("cmd_bound: triangle diagnostics and vacuous path graph") {
  TempDir dir("bound");
  const std::string tri = (dir.path / "triangle.txt").string();
  {
    std::ofstream out(tri);
    out << "3 3\n0 1\n0 2\n1 2\n";
  }
  const std::string path_graph = (dir.path / "path.txt").string();
  {
    std::ofstream out(path_graph);
    out << "4 3\n0 1\n1 2\n2 3\n";
  }

  SUBCASE("triangle constant bound 1/6") {
    const std::string cfg_json = R"({"seed": 3, "graph": {"file": ")" + tri +
                                 R"("}, "bound": {"sigma2": 1.0, "theta": 0.5, "mu": 0.33333, "ks": [0, 10]},
                                  "output": {"dir": ")" + dir.str() + R"(", "id": "tri"}})";
    const ExperimentConfig cfg = parse_experiment_config(cfg_json);
    std::ostringstream log;
    CHECK(cmd_bound(cfg, log) == kExitOk);
    const std::string csv = slurp(dir.path / "tri_bound.csv");
    CHECK(csv.find("dim_psi_perp=1") != std::string::npos);
    CHECK(csv.find("vacuous") == std::string::npos);
    CHECK(csv.find("0,0,0.16666666666666") != std::string::npos);
  }
  SUBCASE("path graph is vacuous with an all-zero bound and exit 0") {
    const std::string cfg_json = R"({"seed": 3, "graph": {"file": ")" + path_graph +
                                 R"("}, "output": {"dir": ")" + dir.str() + R"(", "id": "path"}})";
    const ExperimentConfig cfg = parse_experiment_config(cfg_json);
    std::ostringstream log;
    CHECK(cmd_bound(cfg, log) == kExitOk);
    CHECK(log.str().find("no privacy subspace") != std::string::npos);
    const std::string csv = slurp(dir.path / "path_bound.csv");
    CHECK(csv.find("dim_psi_perp=0") != std::string::npos);
    CHECK(csv.find("vacuous=1") != std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] == '#' || line[0] == 'k') continue;
      CHECK(line.substr(line.rfind(',') + 1) == "0");
    }
  }
}

TEST_CASE("cmd_run exports init, transcript and trajectory") {
  TempDir dir("run");
  const std::string cfg_json = R"({"seed": 5, "graph": {"n": 5, "radius": 0.95},
    "ensemble": {"sigma_z2": 1.0},
    "run": {"iterations": 12}, "output": {"dir": ")" + dir.str() + R"(", "id": "r"}})";
  const ExperimentConfig cfg = parse_experiment_config(cfg_json);
  std::ostringstream log;
  CHECK(cmd_run(cfg, log) == kExitOk);
  const std::string init = slurp(dir.path / "r_init.csv");
  CHECK(init.find("k,holder,peer,value,secure") != std::string::npos);
  const std::string tr = slurp(dir.path / "r_transcript.csv");
  CHECK(tr.find("k,holder,peer,delta_value") != std::string::npos);
  const std::string traj = slurp(dir.path / "r_trajectory.csv");
  CHECK(traj.find("k,node,x") != std::string::npos);
}

TEST_CASE("commands rerun byte-identically across thread counts") {
  TempDir dir_a("det_a");
  TempDir dir_b("det_b");
  auto cfg_for = [&](const TempDir& d, int threads) {
    const std::string cfg_json = R"({"seed": 21, "graph": {"n": 7, "radius": 0.85},
      "ensemble": {"runs": 40, "sigma_z2": 2.0, "record_rounds": [0, 2, 5], "slack": 0.9},
      "mi": {"runs": 40, "record_rounds": [0, 3]},
      "output": {"dir": ")" + d.str() + R"(", "id": "t"}})";
    return parse_experiment_config(cfg_json, {}, {}, threads);
  };
  std::ostringstream log;
  REQUIRE(cmd_fig2(cfg_for(dir_a, 1), log) == kExitOk);
  REQUIRE(cmd_fig2(cfg_for(dir_b, 3), log) == kExitOk);
  REQUIRE(cmd_fig3(cfg_for(dir_a, 1), log) == kExitOk);
  REQUIRE(cmd_fig3(cfg_for(dir_b, 3), log) == kExitOk);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a.path)) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = dir_b.path / entry.path().filename();
    INFO(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 8);
}

TEST_CASE("fig3 requires a scalar consensus model") {
  TempDir dir("fig3d");
  const std::string cfg_json = R"({"seed": 2, "graph": {"n": 6, "radius": 0.9},
    "model": {"type": "consensus", "d": 2},
    "output": {"dir": ")" + dir.str() + R"(", "id": "x"}})";
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_fig3(parse_experiment_config(cfg_json), log), ConfigError);
}

TEST_CASE("failed bound checks surface as the numerical-failure exit code") {
  TempDir dir("exit2");
  // zero slack with a small ensemble: some entry of the unbiased variance
  // estimate always lands below the bound
  const std::string cfg_json = R"({"seed": 2, "graph": {"n": 6, "radius": 0.9},
    "ensemble": {"runs": 24, "sigma_z2": 1.0, "record_rounds": [0, 1, 3], "slack": 0.0},
    "output": {"dir": ")" + dir.str() + R"(", "id": "x"}})";
  std::ostringstream log;
  CHECK(cmd_fig2(parse_experiment_config(cfg_json), log) == kExitCheckFailure);
  CHECK(log.str().find("bound violations") != std::string::npos);
}

TEST_CASE("fig1 produces decreasing x error and a sane CSV") {
  TempDir dir("fig1");
  const std::string cfg_json = R"({"seed": 13, "graph": {"n": 6, "radius": 0.9},
    "ensemble": {"runs": 30, "sigma_z2": 100.0, "record_rounds": [0, 5, 20, 60], "slack": 0.9},
    "output": {"dir": ")" + dir.str() + R"(", "id": "f"}})";
  const ExperimentConfig cfg = parse_experiment_config(cfg_json);
  std::ostringstream log;
  CHECK(cmd_fig1(cfg, log) == kExitOk);
  const std::string csv = slurp(dir.path / "f_fig1.csv");
  CHECK(csv.find("theta,k,round,x_err,var_psi_mean,var_psi_perp_mean,bound_mean") !=
        std::string::npos);
  // x error at the last recorded round far below the first, for theta = 0.5
  std::istringstream lines(csv);
  std::string line;
  double first = -1, last = -1;
  while (std::getline(lines, line)) {
    if (line.rfind("0.5,", 0) != 0) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> row;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    const double xerr = std::stod(row[3]);
    if (first < 0) first = xerr;
    last = xerr;
  }
  REQUIRE(first > 0);
  CHECK(last < 1e-3 * first);
}
