// Times the OpenMP ensemble runner against the serial reference on the
// paper-scale averaging problem and checks that both produce identical
// statistics.
#include <CLI11.hpp>
#include <chrono>
#include <cstdio>

#include "pdmmlab/privacy.hpp"
#include "pdmmlab/rng.hpp"

using namespace pdmmlab;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

bool stats_equal(const EnsembleStats& a, const EnsembleStats& b) {
  if (a.ks != b.ks || a.runs != b.runs) return false;
  for (std::size_t ki = 0; ki < a.ks.size(); ++ki) {
    if (a.var_perp[ki] != b.var_perp[ki]) return false;
    if (a.var_psi[ki] != b.var_psi[ki]) return false;
    if (a.mean_perp[ki] != b.mean_perp[ki]) return false;
    if (a.mean_psi[ki] != b.mean_psi[ki]) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int n = 10, runs = 400, rounds = 200, threads = 0, repeats = 3;
  std::uint64_t seed = 1;
  bool check_only = false;

  CLI::App app{"bench_ensemble: serial reference vs OpenMP ensemble runner"};
  app.add_option("--n", n, "graph size");
  app.add_option("--runs", runs, "Monte-Carlo runs");
  app.add_option("--rounds", rounds, "activation rounds per run");
  app.add_option("--threads", threads, "parallel worker threads (0 = OpenMP default)");
  app.add_option("--repeats", repeats, "timing repeats (best-of)");
  app.add_option("--seed", seed, "master seed");
  app.add_flag("--check", check_only, "verify equality once, skip best-of timing");
  CLI11_PARSE(app, argc, argv);

  const Graph g = generate_rgg(n, rgg_paper_radius(n), derive_seed(seed, "graph"), 100);
  Rng rs(derive_seed(seed, "s"));
  Eigen::MatrixXd s(1, n);
  for (int i = 0; i < n; ++i) s(0, i) = rs.normal();
  const CostModel model = make_consensus_model(s);
  const ConstraintSystem cs = build_constraint_system(g, 1);
  const SubspaceProjector sp = subspace_projector(cs);

  PdmmConfig cfg;
  cfg.c = 0.5;
  cfg.theta = 0.5;
  cfg.scheme = Scheme::AsyncUniformNode;

  EnsembleSpec spec;
  spec.runs = runs;
  spec.sigma_z2 = 1.0;
  spec.schedule_mode = ScheduleMode::FixedAcrossRuns;
  spec.seed = seed;
  for (int r = 0; r <= rounds; r += std::max(1, rounds / 20)) spec.record_ks.push_back(r * n);

  if (check_only) repeats = 1;
  double t_serial = 1e300, t_parallel = 1e300;
  EnsembleResult serial, parallel;
  for (int rep = 0; rep < repeats; ++rep) {
    auto t0 = clock_type::now();
    serial = run_ensemble_serial(model, g, cfg, spec, sp);
    t_serial = std::min(t_serial, seconds_since(t0));

    t0 = clock_type::now();
    parallel = run_ensemble(model, g, cfg, spec, sp, threads);
    t_parallel = std::min(t_parallel, seconds_since(t0));
  }

  if (!stats_equal(serial.stats, parallel.stats)) {
    std::printf("FAIL: parallel ensemble differs from serial reference\n");
    return 1;
  }
  std::printf("n=%d runs=%d rounds=%d record_ks=%zu\n", n, runs, rounds, spec.record_ks.size());
  std::printf("serial    %8.3f s\n", t_serial);
  std::printf("parallel  %8.3f s   speedup %.2fx\n", t_parallel, t_serial / t_parallel);
  std::printf("outputs identical: yes\n");
  return 0;
}
