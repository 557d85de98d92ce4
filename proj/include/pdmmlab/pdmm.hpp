#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pdmmlab/algebra.hpp"
#include "pdmmlab/graph.hpp"

namespace pdmmlab {

// f_i(x) = ||x - s_i||^2; column i of s is node i's private datum.
struct ConsensusModel {
  Eigen::MatrixXd s;  // d x n
};

// f_i(x) = ||A_i x - b_i||^2 per node.
struct LinearRegressionModel {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> b;
};

struct CostModel {
  int d = 1;
  std::variant<ConsensusModel, LinearRegressionModel> costs;
};

CostModel make_consensus_model(const Eigen::MatrixXd& s);
CostModel make_linreg_model(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::VectorXd> b);

// Constrained optimum: every node's block equals the shared minimizer
// (mean of s for consensus, global least-squares solution for regression).
Eigen::VectorXd optimal_x(const CostModel& model, const Graph& g);

// Subgradient of f_i at x_i (both models are differentiable).
Eigen::VectorXd subgradient(const CostModel& model, int i, const Eigen::VectorXd& x_i);

enum class Scheme { Synchronous, AsyncUniformNode, ExplicitMask };

struct PdmmConfig {
  double c = 0.5;
  double theta = 0.5;
  Scheme scheme = Scheme::Synchronous;
  int iterations = 0;
  std::uint64_t seed = 0;

  void validate() const;  // c > 0, theta in (0,1]
};

struct PdmmState {
  Eigen::VectorXd x;  // n d
  Eigen::VectorXd z;  // 2 m d
  int k = 0;
};

PdmmState make_initial_state(const Graph& g, int d, const Eigen::VectorXd& z0);

// Per-iteration update masks, one flag per directed slot (the d entries of a
// slot always fire together). Synchronous keeps no explicit masks; async
// stores the drawn node sequence.
struct Schedule {
  Scheme scheme = Scheme::Synchronous;
  double mu = 1.0;  // per-entry activation probability
  int iterations = 0;
  std::vector<int> nodes;                    // async: active node per iteration
  std::vector<std::vector<std::uint8_t>> masks;  // explicit: per-iteration slot masks

  // Slot mask applied when stepping from iterate k to k+1.
  void fill_slot_mask(const Graph& g, int k, std::span<std::uint8_t> mask) const;
};

Schedule make_schedule(const Graph& g, Scheme scheme, int iterations, std::uint64_t seed);
Schedule make_explicit_schedule(std::vector<std::vector<std::uint8_t>> masks, double mu);

// argmin_{x_i} f_i(x_i) + sum_j z_{i|j}^T A_ij x_i + (c d_i / 2) ||x_i||^2
Eigen::VectorXd local_x_solve(const CostModel& model, const Graph& g, int i,
                              const Eigen::VectorXd& z, const PdmmConfig& cfg);

struct TranscriptMessage {
  int k;       // index of the iterate the message produces
  int holder;  // j of z_{j|i}
  int peer;    // i, the sender
  Eigen::VectorXd delta;
};

// What goes over the wire: z^(0) once over a secure channel, plaintext
// deltas afterwards.
struct Transcript {
  Eigen::VectorXd secure_init;
  std::vector<TranscriptMessage> messages;
};

// Replays secure_init + cumulative deltas, resolving slots from
// (holder, peer); bitwise-identical to the z the simulator produced.
Eigen::VectorXd replay_transcript(const Transcript& t, const Graph& g, int d, int up_to_k = -1);

struct StepScratch {
  std::vector<std::uint8_t> writer_active;
  std::vector<int> active_slots;
  Eigen::VectorXd delta;
};

// z' = (I - theta U) z + theta U (P z + 2 c P C x') with x' computed at the
// writing nodes from the current z. Unmasked slots stay bitwise unchanged.
void stochastic_step(PdmmState& state, const CostModel& model, const Graph& g,
                     const PdmmConfig& cfg, std::span<const std::uint8_t> slot_mask,
                     StepScratch& scratch, std::vector<TranscriptMessage>* messages = nullptr);
void stochastic_step(PdmmState& state, const CostModel& model, const Graph& g,
                     const PdmmConfig& cfg, std::span<const std::uint8_t> slot_mask,
                     std::vector<TranscriptMessage>* messages = nullptr);

// All-slots update; identical code path to stochastic_step with a full mask.
void sync_step(PdmmState& state, const CostModel& model, const Graph& g, const PdmmConfig& cfg,
               std::vector<TranscriptMessage>* messages = nullptr);

// Drives `iterations` steps, invoking obs(state) on the initial state and
// after every step.
template <class Observer>
void simulate(const CostModel& model, const Graph& g, const PdmmConfig& cfg,
              const Schedule& schedule, PdmmState& state, int iterations, Observer&& obs,
              std::vector<TranscriptMessage>* messages = nullptr) {
  StepScratch scratch;
  std::vector<std::uint8_t> mask(2 * g.m());
  obs(state);
  for (int k = 0; k < iterations; ++k) {
    schedule.fill_slot_mask(g, k, mask);
    stochastic_step(state, model, g, cfg, mask, scratch, messages);
    obs(state);
  }
}

struct RunResult {
  std::vector<PdmmState> trajectory;  // trajectory[0] = initial state
  Transcript transcript;
};

RunResult run(const CostModel& model, const Graph& g, const PdmmConfig& cfg,
              const Schedule& schedule, const PdmmState& initial);

}  // namespace pdmmlab
