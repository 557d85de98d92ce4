#include "pdmmlab/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pdmmlab/rng.hpp"

namespace pdmmlab {

void EnsembleSpec::validate() const {
  if (runs < 2) throw std::invalid_argument("ensemble: need at least 2 runs");
  if (sigma_z2 < 0) throw std::invalid_argument("ensemble: sigma_z2 must be >= 0");
  if (!std::is_sorted(record_ks.begin(), record_ks.end()))
    throw std::invalid_argument("ensemble: record_ks must be ascending");
  if (!record_ks.empty() && record_ks.front() < 0)
    throw std::invalid_argument("ensemble: record_ks must be >= 0");
  if (std::adjacent_find(record_ks.begin(), record_ks.end()) != record_ks.end())
    throw std::invalid_argument("ensemble: record_ks must be unique");
}

namespace {

// One Monte-Carlo run, writing into preallocated slots of the result.
void ensemble_run_one(int r, const CostModel& base_model, const Graph& g, const PdmmConfig& cfg,
                      const EnsembleSpec& spec, const Schedule& shared_schedule,
                      EnsembleResult& out) {
  const int d = base_model.d;
  const int zdim = 2 * g.m() * d;

  CostModel model = base_model;
  if (spec.redraw_s) {
    auto* cm = std::get_if<ConsensusModel>(&model.costs);
    if (!cm) throw std::invalid_argument("ensemble: redraw_s supports the consensus model only");
    Rng rs(derive_seed(spec.seed, "s", r));
    for (int i = 0; i < g.n(); ++i)
      for (int t = 0; t < d; ++t) cm->s(t, i) = rs.normal();
  }
  if (const auto* cm = std::get_if<ConsensusModel>(&model.costs)) out.s_per_run[r] = cm->s;

  Rng rz(derive_seed(spec.seed, "init", r));
  Eigen::VectorXd z0(zdim);
  const double sd = std::sqrt(spec.sigma_z2);
  for (int t = 0; t < zdim; ++t) z0(t) = sd * rz.normal();

  const int iters = spec.record_ks.empty() ? 0 : spec.record_ks.back();
  Schedule local;
  const Schedule* sched = &shared_schedule;
  if (spec.schedule_mode == ScheduleMode::IndependentPerRun) {
    local = make_schedule(g, cfg.scheme, iters, derive_seed(spec.seed, "schedule", r));
    sched = &local;
  }

  auto& zs = out.z_snaps[r];
  auto& xs = out.x_snaps[r];
  zs.clear();
  xs.clear();
  std::size_t next = 0;
  PdmmState st = make_initial_state(g, d, z0);
  simulate(model, g, cfg, *sched, st, iters, [&](const PdmmState& s) {
    if (next < spec.record_ks.size() && s.k == spec.record_ks[next]) {
      zs.push_back(s.z);
      xs.push_back(s.x);
      ++next;
    }
  });
}

EnsembleStats aggregate(const EnsembleResult& res, const EnsembleSpec& spec,
                        const SubspaceProjector& sp) {
  EnsembleStats stats;
  stats.ks = spec.record_ks;
  stats.runs = spec.runs;
  stats.vacuous = sp.vacuous();
  const int zdim = static_cast<int>(sp.pi_perp.rows());
  for (std::size_t ki = 0; ki < spec.record_ks.size(); ++ki) {
    Eigen::MatrixXd perp(zdim, spec.runs), psi(zdim, spec.runs);
    for (int r = 0; r < spec.runs; ++r) {
      perp.col(r) = sp.pi_perp * res.z_snaps[r][ki];
      psi.col(r) = res.z_snaps[r][ki] - perp.col(r);
    }
    auto moments = [&](const Eigen::MatrixXd& mat, Eigen::VectorXd& mean, Eigen::VectorXd& var) {
      mean = mat.rowwise().mean();
      var = (mat.colwise() - mean).rowwise().squaredNorm() / (spec.runs - 1);
    };
    Eigen::VectorXd mp, vp, ms, vs;
    moments(perp, mp, vp);
    moments(psi, ms, vs);
    stats.mean_perp.push_back(mp);
    stats.var_perp.push_back(vp);
    stats.mean_psi.push_back(ms);
    stats.var_psi.push_back(vs);
  }
  return stats;
}

EnsembleResult run_ensemble_impl(const CostModel& base_model, const Graph& g,
                                 const PdmmConfig& cfg, const EnsembleSpec& spec,
                                 const SubspaceProjector& sp, bool parallel, int threads) {
  spec.validate();
  cfg.validate();
  if (spec.redraw_s && !std::holds_alternative<ConsensusModel>(base_model.costs))
    throw std::invalid_argument("ensemble: redraw_s supports the consensus model only");
  EnsembleResult res;
  res.z_snaps.resize(spec.runs);
  res.x_snaps.resize(spec.runs);
  res.s_per_run.resize(spec.runs);

  const int iters = spec.record_ks.empty() ? 0 : spec.record_ks.back();
  Schedule shared;
  if (spec.schedule_mode == ScheduleMode::FixedAcrossRuns)
    shared = make_schedule(g, cfg.scheme, iters, derive_seed(spec.seed, "schedule"));

  if (!parallel) {
    for (int r = 0; r < spec.runs; ++r)
      ensemble_run_one(r, base_model, g, cfg, spec, shared, res);
  } else {
#ifdef _OPENMP
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (int r = 0; r < spec.runs; ++r)
      ensemble_run_one(r, base_model, g, cfg, spec, shared, res);
#else
    (void)threads;
    for (int r = 0; r < spec.runs; ++r)
      ensemble_run_one(r, base_model, g, cfg, spec, shared, res);
#endif
  }
  res.stats = aggregate(res, spec, sp);
  return res;
}

}  // namespace

EnsembleResult run_ensemble(const CostModel& base_model, const Graph& g, const PdmmConfig& cfg,
                            const EnsembleSpec& spec, const SubspaceProjector& sp, int threads) {
  return run_ensemble_impl(base_model, g, cfg, spec, sp, /*parallel=*/true, threads);
}

EnsembleResult run_ensemble_serial(const CostModel& base_model, const Graph& g,
                                   const PdmmConfig& cfg, const EnsembleSpec& spec,
                                   const SubspaceProjector& sp) {
  return run_ensemble_impl(base_model, g, cfg, spec, sp, /*parallel=*/false, 0);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> subspace_variance(
    std::span<const Eigen::VectorXd> snapshots_at_k, const SubspaceProjector& sp) {
  const int runs = static_cast<int>(snapshots_at_k.size());
  if (runs < 2) throw std::invalid_argument("subspace_variance: need at least 2 snapshots");
  const int zdim = static_cast<int>(sp.pi_perp.rows());
  Eigen::MatrixXd perp(zdim, runs), psi(zdim, runs);
  for (int r = 0; r < runs; ++r) {
    perp.col(r) = sp.pi_perp * snapshots_at_k[r];
    psi.col(r) = snapshots_at_k[r] - perp.col(r);
  }
  auto var_of = [&](const Eigen::MatrixXd& mat) -> Eigen::VectorXd {
    const Eigen::VectorXd mean = mat.rowwise().mean();
    return (mat.colwise() - mean).rowwise().squaredNorm() / (runs - 1);
  };
  return {var_of(perp), var_of(psi)};
}

double default_bound_slack(int runs) {
  return std::min(3.0 * std::sqrt(2.0 / (runs - 1)), 0.25);
}

BoundReport verify_bound(const EnsembleStats& stats, const BoundCurve& bound, double slack) {
  if (!(slack >= 0 && slack < 1)) throw std::invalid_argument("verify_bound: slack must be in [0,1)");
  BoundReport report;
  report.slack = slack;
  report.vacuous = stats.vacuous;
  for (std::size_t ki = 0; ki < stats.ks.size(); ++ki) {
    const auto it = std::find(bound.ks.begin(), bound.ks.end(), stats.ks[ki]);
    if (it == bound.ks.end())
      throw std::invalid_argument("verify_bound: bound curve missing k=" +
                                  std::to_string(stats.ks[ki]));
    const auto& b = bound.values[it - bound.ks.begin()];
    const auto& v = stats.var_perp[ki];
    for (int e = 0; e < v.size(); ++e) {
      if (v(e) < (1.0 - slack) * b(e)) {
        report.violations.push_back({stats.ks[ki], e, v(e), b(e)});
        report.pass = false;
      }
    }
  }
  return report;
}

double mean_trajectory_check(const CostModel& model, const Graph& g, const PdmmConfig& cfg,
                             const SubspaceProjector& sp, const Eigen::MatrixXd& P,
                             const Eigen::VectorXd& z0, int runs, int max_k, std::uint64_t seed) {
  cfg.validate();
  const Eigen::VectorXd zp0 = sp.pi_perp * z0;
  const double ref = zp0.norm();
  if (ref <= 1e-14 * (1.0 + z0.norm()))
    throw std::invalid_argument("mean_trajectory_check: initialization has no Psi-perp component");
  const double mu = cfg.scheme == Scheme::AsyncUniformNode ? 1.0 / g.n() : 1.0;
  const int zdim = static_cast<int>(z0.size());

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(zdim, max_k + 1);
  const int effective_runs = cfg.scheme == Scheme::Synchronous ? 1 : runs;
  for (int r = 0; r < effective_runs; ++r) {
    const Schedule sched = cfg.scheme == Scheme::Synchronous
                               ? make_schedule(g, cfg.scheme, max_k, 0)
                               : make_schedule(g, cfg.scheme, max_k, derive_seed(seed, "schedule", r));
    PdmmState st = make_initial_state(g, model.d, z0);
    simulate(model, g, cfg, sched, st, max_k,
             [&](const PdmmState& s) { mean.col(s.k) += sp.pi_perp * s.z; });
  }
  mean /= effective_runs;

  double worst = 0;
  for (int k = 0; k <= max_k; ++k) {
    const Eigen::VectorXd expected = expected_zperp(sp, P, z0, cfg.theta, mu, k);
    worst = std::max(worst, (mean.col(k) - expected).norm() / ref);
  }
  return worst;
}

Eigen::VectorXd adversary_observation(const CostModel& model, const Graph& g,
                                      const PdmmConfig& cfg, int i,
                                      const std::vector<int>& honest_neighbors,
                                      const Eigen::VectorXd& z_k) {
  if (honest_neighbors.empty())
    throw std::invalid_argument("adversary_observation: honest neighbor set must be nonempty");
  for (int j : honest_neighbors)
    if (g.edge_index(i, j) < 0)
      throw std::invalid_argument("adversary_observation: " + std::to_string(j) +
                                  " is not a neighbor of " + std::to_string(i));
  const int d = model.d;
  const Eigen::VectorXd x_next = local_x_solve(model, g, i, z_k, cfg);
  Eigen::VectorXd y = subgradient(model, i, x_next);
  for (int j : honest_neighbors) {
    const int slot = g.directed_slot(i, j);
    y += edge_sign(i, j) * z_k.segment(slot * d, d);
  }
  return y;
}

MiEstimate estimate_mi(std::span<const double> s, std::span<const double> y) {
  if (s.size() != y.size()) throw std::invalid_argument("estimate_mi: mismatched sample counts");
  const int n = static_cast<int>(s.size());
  if (n < 10) throw std::invalid_argument("estimate_mi: need at least 10 pairs");
  double ms = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    ms += s[i];
    my += y[i];
  }
  ms /= n;
  my /= n;
  double css = 0, cyy = 0, csy = 0;
  for (int i = 0; i < n; ++i) {
    const double ds = s[i] - ms, dy = y[i] - my;
    css += ds * ds;
    cyy += dy * dy;
    csy += ds * dy;
  }
  if (css == 0 || cyy == 0)
    throw std::invalid_argument("estimate_mi: undefined correlation (zero variance)");
  MiEstimate est;
  est.pairs = n;
  est.rho = csy / std::sqrt(css * cyy);
  est.rho2 = std::min(est.rho * est.rho, 1.0 - 1e-12);
  est.mi_nats = -0.5 * std::log1p(-est.rho2);
  return est;
}

}  // namespace pdmmlab
