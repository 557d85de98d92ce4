#include "pdmmlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "pdmmlab/csv.hpp"
#include "pdmmlab/rng.hpp"

namespace pdmmlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

std::vector<int> get_int_list(const json& obj, const char* key) {
  std::vector<int> out;
  if (!obj.contains(key)) return out;
  if (!obj.at(key).is_array()) throw ConfigError(std::string("config: '") + key + "' must be a list");
  for (const auto& v : obj.at(key)) out.push_back(v.get<int>());
  return out;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

Scheme parse_scheme(const std::string& s) {
  if (s == "sync" || s == "synchronous") return Scheme::Synchronous;
  if (s == "async" || s == "async-uniform-node") return Scheme::AsyncUniformNode;
  throw ConfigError("config: scheme must be 'sync' or 'async', got '" + s + "'");
}

std::string scheme_name(Scheme s) {
  return s == Scheme::Synchronous ? "sync" : "async";
}

ExperimentConfig from_json(json j, std::optional<std::uint64_t> seed_override,
                           std::optional<std::string> out_override,
                           std::optional<int> threads_override) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  if (seed_override) j["seed"] = *seed_override;
  if (out_override) j["output"]["dir"] = *out_override;

  check_keys(j, {"seed", "threads", "graph", "model", "pdmm", "ensemble", "mi", "bound", "run",
                 "output"},
             "top level");
  ExperimentConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.threads = get_or<int>(j, "threads", cfg.threads);
  if (threads_override) cfg.threads = *threads_override;
  // worker count is an execution detail: outputs and the recorded hash do
  // not depend on it
  j.erase("threads");

  if (!j.contains("graph")) throw ConfigError("config: missing 'graph' block");
  {
    const auto& g = j.at("graph");
    check_keys(g, {"file", "n", "radius", "max_attempts"}, "'graph'");
    if (g.contains("file")) {
      if (g.contains("n") || g.contains("radius"))
        throw ConfigError("config: 'graph.file' excludes 'n'/'radius'");
      cfg.graph.from_file = true;
      cfg.graph.file = g.at("file").get<std::string>();
    } else {
      cfg.graph.n = get_or<int>(g, "n", cfg.graph.n);
      if (cfg.graph.n < 1) throw ConfigError("config: graph.n must be >= 1");
      if (g.contains("radius")) {
        if (g.at("radius").is_string()) {
          if (g.at("radius").get<std::string>() != "paper")
            throw ConfigError("config: graph.radius must be a number or \"paper\"");
        } else {
          cfg.graph.radius = g.at("radius").get<double>();
          if (!(cfg.graph.radius > 0)) throw ConfigError("config: graph.radius must be > 0");
        }
      }
      cfg.graph.max_attempts = get_or<int>(g, "max_attempts", cfg.graph.max_attempts);
    }
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, {"type", "d", "s_sigma2", "rows"}, "'model'");
    const std::string type = get_or<std::string>(m, "type", "consensus");
    if (type == "consensus")
      cfg.model.type = ModelSpec::Type::Consensus;
    else if (type == "linreg")
      cfg.model.type = ModelSpec::Type::LinearRegression;
    else
      throw ConfigError("config: model.type must be 'consensus' or 'linreg'");
    cfg.model.d = get_or<int>(m, "d", cfg.model.d);
    if (cfg.model.d < 1) throw ConfigError("config: model.d must be >= 1");
    cfg.model.s_sigma2 = get_or<double>(m, "s_sigma2", cfg.model.s_sigma2);
    cfg.model.rows = get_or<int>(m, "rows", cfg.model.rows);
    if (cfg.model.rows < 1) throw ConfigError("config: model.rows must be >= 1");
  }

  if (j.contains("pdmm")) {
    const auto& p = j.at("pdmm");
    check_keys(p, {"c", "theta", "scheme"}, "'pdmm'");
    cfg.c = get_or<double>(p, "c", cfg.c);
    cfg.theta = get_or<double>(p, "theta", cfg.theta);
    if (p.contains("scheme")) cfg.scheme = parse_scheme(p.at("scheme").get<std::string>());
    if (!(cfg.c > 0)) throw ConfigError("config: pdmm.c must be > 0");
    if (!(cfg.theta > 0 && cfg.theta <= 1))
      throw ConfigError("config: pdmm.theta must be in (0,1]");
  }

  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    check_keys(e, {"runs", "sigma_z2", "schedule_mode", "record_rounds", "slack"}, "'ensemble'");
    cfg.ensemble.runs = get_or<int>(e, "runs", cfg.ensemble.runs);
    if (cfg.ensemble.runs < 2) throw ConfigError("config: ensemble.runs must be >= 2");
    cfg.ensemble.sigma_z2 = get_or<double>(e, "sigma_z2", cfg.ensemble.sigma_z2);
    if (cfg.ensemble.sigma_z2 < 0) throw ConfigError("config: ensemble.sigma_z2 must be >= 0");
    const std::string mode = get_or<std::string>(e, "schedule_mode", "fixed");
    if (mode == "fixed")
      cfg.ensemble.mode = ScheduleMode::FixedAcrossRuns;
    else if (mode == "independent")
      cfg.ensemble.mode = ScheduleMode::IndependentPerRun;
    else
      throw ConfigError("config: ensemble.schedule_mode must be 'fixed' or 'independent'");
    cfg.ensemble.record_rounds = get_int_list(e, "record_rounds");
    cfg.ensemble.slack = get_or<double>(e, "slack", cfg.ensemble.slack);
    if (cfg.ensemble.slack >= 1) throw ConfigError("config: ensemble.slack must be < 1");
  }

  if (j.contains("mi")) {
    const auto& m = j.at("mi");
    check_keys(m, {"runs", "target_node", "honest_neighbor", "sigma_z2", "record_rounds"}, "'mi'");
    cfg.mi.runs = get_or<int>(m, "runs", cfg.mi.runs);
    if (cfg.mi.runs < 10) throw ConfigError("config: mi.runs must be >= 10");
    cfg.mi.target_node = get_or<int>(m, "target_node", cfg.mi.target_node);
    cfg.mi.honest_neighbor = get_or<int>(m, "honest_neighbor", cfg.mi.honest_neighbor);
    if (m.contains("sigma_z2")) {
      cfg.mi.sigma_z2.clear();
      for (const auto& v : m.at("sigma_z2")) cfg.mi.sigma_z2.push_back(v.get<double>());
      if (cfg.mi.sigma_z2.empty()) throw ConfigError("config: mi.sigma_z2 must be nonempty");
    }
    cfg.mi.record_rounds = get_int_list(m, "record_rounds");
  }

  if (j.contains("bound")) {
    const auto& b = j.at("bound");
    check_keys(b, {"sigma2", "theta", "mu", "ks"}, "'bound'");
    cfg.bound.sigma2 = get_or<double>(b, "sigma2", cfg.bound.sigma2);
    if (cfg.bound.sigma2 < 0) throw ConfigError("config: bound.sigma2 must be >= 0");
    cfg.bound.theta = get_or<double>(b, "theta", cfg.bound.theta);
    cfg.bound.mu = get_or<double>(b, "mu", cfg.bound.mu);
    cfg.bound.ks = get_int_list(b, "ks");
  }

  if (j.contains("run")) {
    const auto& r = j.at("run");
    check_keys(r, {"iterations"}, "'run'");
    cfg.run.iterations = get_or<int>(r, "iterations", cfg.run.iterations);
    if (cfg.run.iterations < 0) throw ConfigError("config: run.iterations must be >= 0");
  }

  if (j.contains("output")) {
    auto& o = j.at("output");
    check_keys(o, {"dir", "id"}, "'output'");
    cfg.out_dir = get_or<std::string>(o, "dir", cfg.out_dir);
    cfg.id = get_or<std::string>(o, "id", cfg.id);
    // like the worker count, the destination directory is an execution
    // detail; the hash pins the experiment itself
    o.erase("dir");
    if (o.empty()) j.erase("output");
  }

  cfg.config_hash = "fnv1a:" + hex64(fnv1a64(j.dump()));
  return cfg;
}

Graph build_graph(const ExperimentConfig& cfg) {
  if (cfg.graph.from_file) return load_graph(cfg.graph.file);
  const double radius =
      cfg.graph.radius > 0 ? cfg.graph.radius : rgg_paper_radius(cfg.graph.n);
  return generate_rgg(cfg.graph.n, radius, derive_seed(cfg.seed, "graph"), cfg.graph.max_attempts);
}

CostModel build_model(const ExperimentConfig& cfg, const Graph& g) {
  const int d = cfg.model.d;
  if (cfg.model.type == ModelSpec::Type::Consensus) {
    Rng rng(derive_seed(cfg.seed, "s"));
    Eigen::MatrixXd s(d, g.n());
    const double sd = std::sqrt(cfg.model.s_sigma2);
    for (int i = 0; i < g.n(); ++i)
      for (int t = 0; t < d; ++t) s(t, i) = sd * rng.normal();
    return make_consensus_model(s);
  }
  std::vector<Eigen::MatrixXd> A(g.n());
  std::vector<Eigen::VectorXd> b(g.n());
  for (int i = 0; i < g.n(); ++i) {
    Rng rng(derive_seed(cfg.seed, "model", i));
    A[i].resize(cfg.model.rows, d);
    b[i].resize(cfg.model.rows);
    for (int r = 0; r < cfg.model.rows; ++r) {
      for (int t = 0; t < d; ++t) A[i](r, t) = rng.normal();
      b[i](r) = rng.normal();
    }
  }
  return make_linreg_model(std::move(A), std::move(b));
}

std::vector<int> default_log_rounds(int max_round) {
  std::vector<int> rounds{0};
  double v = 1;
  while (static_cast<int>(v) < max_round) {
    const int r = static_cast<int>(v);
    if (r != rounds.back()) rounds.push_back(r);
    v *= 1.25;
  }
  rounds.push_back(max_round);
  return rounds;
}

std::vector<int> linear_rounds(int max_round, int step) {
  std::vector<int> rounds;
  for (int r = 0; r <= max_round; r += step) rounds.push_back(r);
  return rounds;
}

std::vector<int> rounds_to_ks(const std::vector<int>& rounds, Scheme scheme, int n) {
  std::vector<int> ks(rounds.size());
  const int scale = scheme == Scheme::AsyncUniformNode ? n : 1;
  std::transform(rounds.begin(), rounds.end(), ks.begin(), [&](int r) { return r * scale; });
  return ks;
}

void write_standard_meta(CsvWriter& w, const ExperimentConfig& cfg) {
  w.comment("pdmmlab v" + std::string(kToolVersion));
  w.comment("config_hash=" + cfg.config_hash);
  w.comment("seed=" + std::to_string(cfg.seed));
}

PdmmConfig pdmm_config(const ExperimentConfig& cfg, Scheme scheme, double theta, int iterations) {
  PdmmConfig pc;
  pc.c = cfg.c;
  pc.theta = theta;
  pc.scheme = scheme;
  pc.iterations = iterations;
  pc.seed = cfg.seed;
  return pc;
}

double slack_for(const ExperimentConfig& cfg) {
  return cfg.ensemble.slack >= 0 ? cfg.ensemble.slack : default_bound_slack(cfg.ensemble.runs);
}

void write_verify_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                      const EnsembleStats& stats, const BoundCurve& bound, double slack) {
  CsvWriter w(path);
  write_standard_meta(w, cfg);
  w.comment("slack=" + format_double(slack));
  if (stats.vacuous) w.comment("vacuous=1 (no privacy subspace -- bound is vacuous)");
  w.row("k", "entry_slot", "var_psi_perp", "var_psi", "bound", "pass");
  for (std::size_t ki = 0; ki < stats.ks.size(); ++ki) {
    const auto& b = bound.values[ki];
    for (int e = 0; e < b.size(); ++e) {
      const bool ok = stats.var_perp[ki](e) >= (1.0 - slack) * b(e);
      w.row(stats.ks[ki], e, stats.var_perp[ki](e), stats.var_psi[ki](e), b(e), ok ? 1 : 0);
    }
  }
}

const std::vector<double> kFigureThetas{1.0, 0.8, 0.5};

std::string theta_tag(double theta) { return format_double(theta); }

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         std::optional<std::uint64_t> seed_override,
                                         std::optional<std::string> out_override,
                                         std::optional<int> threads_override) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(std::move(j), seed_override, out_override, threads_override);
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        std::optional<std::uint64_t> seed_override,
                                        std::optional<std::string> out_override,
                                        std::optional<int> threads_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), seed_override, out_override, threads_override);
}

int cmd_fig1(const ExperimentConfig& cfg, std::ostream& log) {
  const Graph g = build_graph(cfg);
  const CostModel model = build_model(cfg, g);
  const ConstraintSystem cs = build_constraint_system(g, model.d);
  const SubspaceProjector sp = subspace_projector(cs);
  const Eigen::VectorXd xstar = optimal_x(model, g);

  const std::vector<int> rounds = cfg.ensemble.record_rounds.empty()
                                      ? default_log_rounds(2000)
                                      : cfg.ensemble.record_rounds;
  const std::vector<int> ks = rounds_to_ks(rounds, Scheme::AsyncUniformNode, g.n());
  const double slack = slack_for(cfg);

  const std::filesystem::path dir(cfg.out_dir);
  CsvWriter w(dir / (cfg.id + "_fig1.csv"));
  write_standard_meta(w, cfg);
  w.comment("scheme=async n=" + std::to_string(g.n()) + " m=" + std::to_string(g.m()) +
            " dim_psi=" + std::to_string(sp.dim_psi) +
            " dim_psi_perp=" + std::to_string(sp.dim_psi_perp));
  if (sp.vacuous()) {
    w.comment("vacuous=1 (no privacy subspace -- bound is vacuous)");
    log << "warning: no privacy subspace -- bound is vacuous\n";
  }
  w.row("theta", "k", "round", "x_err", "var_psi_mean", "var_psi_perp_mean", "bound_mean");

  bool all_pass = true;
  for (double theta : kFigureThetas) {
    EnsembleSpec spec;
    spec.runs = cfg.ensemble.runs;
    spec.sigma_z2 = cfg.ensemble.sigma_z2;
    spec.schedule_mode = cfg.ensemble.mode;
    spec.record_ks = ks;
    spec.seed = cfg.seed;
    const PdmmConfig pc = pdmm_config(cfg, Scheme::AsyncUniformNode, theta, ks.back());
    const EnsembleResult res = run_ensemble(model, g, pc, spec, sp, cfg.threads);
    const BoundCurve bc = bound_curve(sp, cs.P, spec.sigma_z2, theta, 1.0 / g.n(), ks);

    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      double xerr = 0;
      for (int r = 0; r < spec.runs; ++r) xerr += (res.x_snaps[r][ki] - xstar).norm();
      xerr /= spec.runs;
      w.row(theta, ks[ki], static_cast<double>(rounds[ki]), xerr,
            res.stats.var_psi[ki].mean(), res.stats.var_perp[ki].mean(),
            bc.values[ki].mean());
    }
    const BoundReport report = verify_bound(res.stats, bc, slack);
    write_verify_csv(dir / (cfg.id + "_fig1_verify_theta" + theta_tag(theta) + ".csv"), cfg,
                     res.stats, bc, slack);
    if (!report.pass) {
      all_pass = false;
      log << "fig1: theta=" << theta << ": " << report.violations.size()
          << " bound violations (slack=" << slack << ")\n";
    }
  }
  return all_pass ? kExitOk : kExitCheckFailure;
}

int cmd_fig2(const ExperimentConfig& cfg, std::ostream& log) {
  const Graph g = build_graph(cfg);
  const CostModel model = build_model(cfg, g);
  const ConstraintSystem cs = build_constraint_system(g, model.d);
  const SubspaceProjector sp = subspace_projector(cs);

  const std::vector<int> rounds = cfg.ensemble.record_rounds.empty()
                                      ? linear_rounds(30, 1)
                                      : cfg.ensemble.record_rounds;
  const double slack = slack_for(cfg);

  const std::filesystem::path dir(cfg.out_dir);
  CsvWriter w(dir / (cfg.id + "_fig2.csv"));
  write_standard_meta(w, cfg);
  w.comment("n=" + std::to_string(g.n()) + " m=" + std::to_string(g.m()) +
            " dim_psi=" + std::to_string(sp.dim_psi) +
            " dim_psi_perp=" + std::to_string(sp.dim_psi_perp));
  if (sp.vacuous()) {
    w.comment("vacuous=1 (no privacy subspace -- bound is vacuous)");
    log << "warning: no privacy subspace -- bound is vacuous\n";
  }
  w.row("scheme", "theta", "k", "round", "var_psi_perp_mean", "bound_mean");

  bool all_pass = true;
  for (Scheme scheme : {Scheme::Synchronous, Scheme::AsyncUniformNode}) {
    const double mu = scheme == Scheme::AsyncUniformNode ? 1.0 / g.n() : 1.0;
    const std::vector<int> ks = rounds_to_ks(rounds, scheme, g.n());
    for (double theta : kFigureThetas) {
      EnsembleSpec spec;
      spec.runs = cfg.ensemble.runs;
      spec.sigma_z2 = cfg.ensemble.sigma_z2;
      spec.schedule_mode = cfg.ensemble.mode;
      spec.record_ks = ks;
      spec.seed = cfg.seed;
      const PdmmConfig pc = pdmm_config(cfg, scheme, theta, ks.back());
      const EnsembleResult res = run_ensemble(model, g, pc, spec, sp, cfg.threads);
      const BoundCurve bc = bound_curve(sp, cs.P, spec.sigma_z2, theta, mu, ks);
      for (std::size_t ki = 0; ki < ks.size(); ++ki)
        w.row(scheme_name(scheme), theta, ks[ki], static_cast<double>(rounds[ki]),
              res.stats.var_perp[ki].mean(), bc.values[ki].mean());
      const BoundReport report = verify_bound(res.stats, bc, slack);
      write_verify_csv(dir / (cfg.id + "_fig2_verify_" + scheme_name(scheme) + "_theta" +
                              theta_tag(theta) + ".csv"),
                       cfg, res.stats, bc, slack);
      if (!report.pass) {
        all_pass = false;
        log << "fig2: " << scheme_name(scheme) << " theta=" << theta << ": "
            << report.violations.size() << " bound violations (slack=" << slack << ")\n";
      }
    }
  }
  return all_pass ? kExitOk : kExitCheckFailure;
}

int cmd_fig3(const ExperimentConfig& cfg, std::ostream& log) {
  const Graph g = build_graph(cfg);
  if (cfg.model.type != ModelSpec::Type::Consensus || cfg.model.d != 1)
    throw ConfigError("fig3: requires the consensus model with d=1");
  const CostModel model = build_model(cfg, g);
  const ConstraintSystem cs = build_constraint_system(g, model.d);
  const SubspaceProjector sp = subspace_projector(cs);

  int target = cfg.mi.target_node;
  if (target < 0) {
    target = 0;
    for (int i = 1; i < g.n(); ++i)
      if (g.degree(i) < g.degree(target)) target = i;
  }
  if (target >= g.n() || g.degree(target) == 0)
    throw ConfigError("fig3: target node must exist and have neighbors");
  int honest = cfg.mi.honest_neighbor;
  if (honest < 0) honest = g.neighbors(target)[0];
  if (g.edge_index(target, honest) < 0)
    throw ConfigError("fig3: honest_neighbor must be adjacent to the target node");

  const std::vector<int> rounds =
      cfg.mi.record_rounds.empty() ? linear_rounds(30, 2) : cfg.mi.record_rounds;

  const std::filesystem::path dir(cfg.out_dir);
  CsvWriter w(dir / (cfg.id + "_fig3.csv"));
  write_standard_meta(w, cfg);
  w.comment("target_node=" + std::to_string(target) +
            " honest_neighbor=" + std::to_string(honest) + " runs=" + std::to_string(cfg.mi.runs));
  w.row("k", "round", "sigma_z2", "scheme", "theta", "rho2", "mi_nats");

  for (Scheme scheme : {Scheme::Synchronous, Scheme::AsyncUniformNode}) {
    const std::vector<int> ks = rounds_to_ks(rounds, scheme, g.n());
    for (double sigma_z2 : cfg.mi.sigma_z2) {
      EnsembleSpec spec;
      spec.runs = cfg.mi.runs;
      spec.sigma_z2 = sigma_z2;
      spec.schedule_mode = ScheduleMode::IndependentPerRun;
      spec.record_ks = ks;
      spec.seed = cfg.seed;  // sub-streams shared across scheme/sigma settings
      spec.redraw_s = true;
      const PdmmConfig pc = pdmm_config(cfg, scheme, cfg.theta, ks.back());
      const EnsembleResult res = run_ensemble(model, g, pc, spec, sp, cfg.threads);

      std::vector<double> s_vals(spec.runs);
      for (int r = 0; r < spec.runs; ++r) s_vals[r] = res.s_per_run[r](0, target);
      for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        std::vector<double> y_vals(spec.runs);
        for (int r = 0; r < spec.runs; ++r) {
          CostModel m = model;
          std::get<ConsensusModel>(m.costs).s = res.s_per_run[r];
          y_vals[r] =
              adversary_observation(m, g, pc, target, {honest}, res.z_snaps[r][ki])(0);
        }
        const MiEstimate mi = estimate_mi(s_vals, y_vals);
        w.row(ks[ki], static_cast<double>(rounds[ki]), sigma_z2, scheme_name(scheme), cfg.theta,
              mi.rho2, mi.mi_nats);
      }
    }
  }
  log << "fig3: target node " << target << ", honest neighbor " << honest << "\n";
  return kExitOk;
}

int cmd_bound(const ExperimentConfig& cfg, std::ostream& log) {
  const Graph g = build_graph(cfg);
  const ConstraintSystem cs = build_constraint_system(g, cfg.model.d);
  const SubspaceProjector sp = subspace_projector(cs);

  const double theta = cfg.bound.theta > 0 ? cfg.bound.theta : cfg.theta;
  const double mu = cfg.bound.mu > 0
                        ? cfg.bound.mu
                        : (cfg.scheme == Scheme::AsyncUniformNode ? 1.0 / g.n() : 1.0);
  const std::vector<int> ks = cfg.bound.ks.empty() ? linear_rounds(50, 5) : cfg.bound.ks;
  const BoundCurve bc = bound_curve(sp, cs.P, cfg.bound.sigma2, theta, mu, ks);

  const std::filesystem::path dir(cfg.out_dir);
  CsvWriter w(dir / (cfg.id + "_bound.csv"));
  write_standard_meta(w, cfg);
  w.comment("n=" + std::to_string(g.n()) + " m=" + std::to_string(g.m()) +
            " dim_psi=" + std::to_string(sp.dim_psi) +
            " dim_psi_perp=" + std::to_string(sp.dim_psi_perp));
  w.comment("sigma2=" + format_double(cfg.bound.sigma2) + " theta=" + format_double(theta) +
            " mu=" + format_double(mu));
  if (sp.vacuous()) {
    w.comment("vacuous=1 (no privacy subspace -- bound is vacuous)");
    log << "warning: no privacy subspace -- bound is vacuous\n";
  }
  w.row("k", "entry_slot", "bound");
  for (std::size_t ki = 0; ki < ks.size(); ++ki)
    for (int e = 0; e < bc.values[ki].size(); ++e) w.row(ks[ki], e, bc.values[ki](e));
  log << "bound: dim_psi=" << sp.dim_psi << " dim_psi_perp=" << sp.dim_psi_perp
      << (sp.vacuous() ? " (vacuous)" : "") << "\n";
  return kExitOk;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  const Graph g = build_graph(cfg);
  const CostModel model = build_model(cfg, g);
  const int d = model.d;

  Rng rz(derive_seed(cfg.seed, "init", 0));
  Eigen::VectorXd z0(2 * g.m() * d);
  const double sd = std::sqrt(cfg.ensemble.sigma_z2);
  for (int t = 0; t < z0.size(); ++t) z0(t) = sd * rz.normal();

  const PdmmConfig pc = pdmm_config(cfg, cfg.scheme, cfg.theta, cfg.run.iterations);
  const Schedule sched =
      make_schedule(g, cfg.scheme, cfg.run.iterations, derive_seed(cfg.seed, "schedule"));
  const RunResult result = run(model, g, pc, sched, make_initial_state(g, d, z0));

  const std::filesystem::path dir(cfg.out_dir);
  {
    CsvWriter w(dir / (cfg.id + "_init.csv"));
    write_standard_meta(w, cfg);
    if (d == 1)
      w.row("k", "holder", "peer", "value", "secure");
    else
      w.row("k", "holder", "peer", "value", "component", "secure");
    for (int s = 0; s < 2 * g.m(); ++s) {
      for (int t = 0; t < d; ++t) {
        if (d == 1)
          w.row(0, g.slot_holder(s), g.slot_writer(s), z0(s * d + t), 1);
        else
          w.row(0, g.slot_holder(s), g.slot_writer(s), z0(s * d + t), t, 1);
      }
    }
  }
  {
    CsvWriter w(dir / (cfg.id + "_transcript.csv"));
    write_standard_meta(w, cfg);
    if (d == 1)
      w.row("k", "holder", "peer", "delta_value");
    else
      w.row("k", "holder", "peer", "delta_value", "component");
    for (const auto& msg : result.transcript.messages) {
      for (int t = 0; t < d; ++t) {
        if (d == 1)
          w.row(msg.k, msg.holder, msg.peer, msg.delta(t));
        else
          w.row(msg.k, msg.holder, msg.peer, msg.delta(t), t);
      }
    }
  }
  {
    CsvWriter w(dir / (cfg.id + "_trajectory.csv"));
    write_standard_meta(w, cfg);
    if (d == 1)
      w.row("k", "node", "x");
    else
      w.row("k", "node", "component", "x");
    for (const auto& st : result.trajectory) {
      for (int i = 0; i < g.n(); ++i) {
        for (int t = 0; t < d; ++t) {
          if (d == 1)
            w.row(st.k, i, st.x(i * d + t));
          else
            w.row(st.k, i, t, st.x(i * d + t));
        }
      }
    }
  }

  const Eigen::VectorXd xstar = optimal_x(model, g);
  const double err = (result.trajectory.back().x - xstar).norm();
  log << "run: " << cfg.run.iterations << " iterations, final ||x - x*|| = " << err << "\n";
  return kExitOk;
}

}  // namespace pdmmlab
