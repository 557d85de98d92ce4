#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "pdmmlab/algebra.hpp"
#include "pdmmlab/pdmm.hpp"

namespace pdmmlab {

enum class ScheduleMode { FixedAcrossRuns, IndependentPerRun };

struct EnsembleSpec {
  int runs = 100;
  double sigma_z2 = 1.0;          // variance of each z^(0) entry
  ScheduleMode schedule_mode = ScheduleMode::FixedAcrossRuns;
  std::vector<int> record_ks;     // ascending, >= 0
  std::uint64_t seed = 0;         // master seed; sub-streams derived per role
  bool redraw_s = false;          // MI protocol: fresh s ~ N(0, I) per run

  void validate() const;
};

struct EnsembleStats {
  std::vector<int> ks;
  int runs = 0;
  bool vacuous = false;  // dim Psi_perp == 0: bound carries no information
  std::vector<Eigen::VectorXd> mean_perp, var_perp;  // Pi_perp z, per k
  std::vector<Eigen::VectorXd> mean_psi, var_psi;    // Pi_psi z, per k
};

struct EnsembleResult {
  EnsembleStats stats;
  // raw per-run snapshots at record_ks, resolution for MI and custom probes
  std::vector<std::vector<Eigen::VectorXd>> z_snaps;  // [run][ki]
  std::vector<std::vector<Eigen::VectorXd>> x_snaps;  // [run][ki]
  std::vector<Eigen::MatrixXd> s_per_run;             // d x n (consensus only)
};

// Monte-Carlo ensemble over random z^(0) ~ N(0, sigma_z2 I). threads == 1
// runs the serial reference loop; threads == 0 uses the OpenMP default.
// Output is identical for every thread count.
EnsembleResult run_ensemble(const CostModel& base_model, const Graph& g, const PdmmConfig& cfg,
                            const EnsembleSpec& spec, const SubspaceProjector& sp,
                            int threads = 0);

// Serial reference implementation (plain loop, no OpenMP pragmas).
EnsembleResult run_ensemble_serial(const CostModel& base_model, const Graph& g,
                                   const PdmmConfig& cfg, const EnsembleSpec& spec,
                                   const SubspaceProjector& sp);

// Unbiased per-entry sample variance of (Pi_perp z, Pi_psi z) over a set of
// snapshots taken at one iteration.
std::pair<Eigen::VectorXd, Eigen::VectorXd> subspace_variance(
    std::span<const Eigen::VectorXd> snapshots_at_k, const SubspaceProjector& sp);

struct BoundReport {
  struct Violation {
    int k;
    int entry;
    double variance;
    double bound;
  };
  std::vector<Violation> violations;
  double slack = 0;
  bool vacuous = false;
  bool pass = true;
};

// Passes iff sample variance >= (1 - slack) * bound entrywise at every
// recorded k. A vacuous projector passes by definition (all-zero bound).
BoundReport verify_bound(const EnsembleStats& stats, const BoundCurve& bound, double slack);

// Three-sigma chi-square slack for an R-run variance estimate, capped.
double default_bound_slack(int runs);

// Max over k <= max_k of
//   || mean_r Pi_perp z_r^(k) - expected_zperp(z0, theta, mu, k) || / || Pi_perp z0 ||
// over `runs` independently drawn schedules. Throws when z0 has no Psi_perp
// component.
double mean_trajectory_check(const CostModel& model, const Graph& g, const PdmmConfig& cfg,
                             const SubspaceProjector& sp, const Eigen::MatrixXd& P,
                             const Eigen::VectorXd& z0, int runs, int max_k, std::uint64_t seed);

// Eq.-(9)-style observation at node i from the honest neighbours' auxiliary
// variables: y = df_i(x_i^(k+1)) + sum_{j in honest} A_ij z_{i|j}^(k), where
// x_i^(k+1) is node i's local solve against z^(k).
Eigen::VectorXd adversary_observation(const CostModel& model, const Graph& g,
                                      const PdmmConfig& cfg, int i,
                                      const std::vector<int>& honest_neighbors,
                                      const Eigen::VectorXd& z_k);

struct MiEstimate {
  double rho = 0;      // sample Pearson correlation
  double rho2 = 0;     // normalized mutual information
  double mi_nats = 0;  // -1/2 ln(1 - rho^2), clamped at rho^2 <= 1 - 1e-12
  int pairs = 0;
};

// Gaussian (correlation-based) mutual-information estimate from paired
// samples. Requires >= 10 pairs and nonzero variance on both sides.
MiEstimate estimate_mi(std::span<const double> s, std::span<const double> y);

}  // namespace pdmmlab
