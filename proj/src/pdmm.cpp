#include "pdmmlab/pdmm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <stdexcept>

#include "pdmmlab/rng.hpp"

namespace pdmmlab {

CostModel make_consensus_model(const Eigen::MatrixXd& s) {
  CostModel model;
  model.d = static_cast<int>(s.rows());
  model.costs = ConsensusModel{s};
  return model;
}

CostModel make_linreg_model(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::VectorXd> b) {
  if (A.empty() || A.size() != b.size())
    throw std::invalid_argument("make_linreg_model: need one (A_i, b_i) pair per node");
  CostModel model;
  model.d = static_cast<int>(A[0].cols());
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].cols() != model.d || A[i].rows() != b[i].size())
      throw std::invalid_argument("make_linreg_model: inconsistent dimensions at node " +
                                  std::to_string(i));
  }
  model.costs = LinearRegressionModel{std::move(A), std::move(b)};
  return model;
}

Eigen::VectorXd optimal_x(const CostModel& model, const Graph& g) {
  const int n = g.n(), d = model.d;
  Eigen::VectorXd w(d);
  if (const auto* cm = std::get_if<ConsensusModel>(&model.costs)) {
    w = cm->s.rowwise().mean();
  } else {
    const auto& lr = std::get<LinearRegressionModel>(model.costs);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
      gram += lr.A[i].transpose() * lr.A[i];
      rhs += lr.A[i].transpose() * lr.b[i];
    }
    w = gram.ldlt().solve(rhs);
  }
  Eigen::VectorXd x(n * d);
  for (int i = 0; i < n; ++i) x.segment(i * d, d) = w;
  return x;
}

Eigen::VectorXd subgradient(const CostModel& model, int i, const Eigen::VectorXd& x_i) {
  if (const auto* cm = std::get_if<ConsensusModel>(&model.costs))
    return 2.0 * (x_i - cm->s.col(i));
  const auto& lr = std::get<LinearRegressionModel>(model.costs);
  return 2.0 * lr.A[i].transpose() * (lr.A[i] * x_i - lr.b[i]);
}

void PdmmConfig::validate() const {
  if (!(c > 0)) throw std::invalid_argument("pdmm: c must be > 0");
  if (!(theta > 0 && theta <= 1)) throw std::invalid_argument("pdmm: theta must be in (0,1]");
  if (iterations < 0) throw std::invalid_argument("pdmm: iterations must be >= 0");
}

PdmmState make_initial_state(const Graph& g, int d, const Eigen::VectorXd& z0) {
  if (z0.size() != 2 * g.m() * d)
    throw std::invalid_argument("make_initial_state: z0 must have length 2 m d");
  PdmmState st;
  st.x = Eigen::VectorXd::Zero(g.n() * d);
  st.z = z0;
  st.k = 0;
  return st;
}

void Schedule::fill_slot_mask(const Graph& g, int k, std::span<std::uint8_t> mask) const {
  const int slots = 2 * g.m();
  if (static_cast<int>(mask.size()) != slots)
    throw std::invalid_argument("schedule: mask span has wrong length");
  switch (scheme) {
    case Scheme::Synchronous:
      std::fill(mask.begin(), mask.end(), std::uint8_t{1});
      return;
    case Scheme::AsyncUniformNode: {
      if (k < 0 || k >= static_cast<int>(nodes.size()))
        throw std::out_of_range("schedule: iteration beyond drawn node sequence");
      std::fill(mask.begin(), mask.end(), std::uint8_t{0});
      const int i = nodes[k];
      for (int j : g.neighbors(i)) mask[g.directed_slot(j, i)] = 1;  // slots written by i
      return;
    }
    case Scheme::ExplicitMask: {
      if (k < 0 || k >= static_cast<int>(masks.size()))
        throw std::out_of_range("schedule: iteration beyond provided masks");
      if (static_cast<int>(masks[k].size()) != slots)
        throw std::invalid_argument("schedule: explicit mask has wrong length");
      std::copy(masks[k].begin(), masks[k].end(), mask.begin());
      return;
    }
  }
  throw std::logic_error("schedule: unknown scheme");
}

Schedule make_schedule(const Graph& g, Scheme scheme, int iterations, std::uint64_t seed) {
  if (iterations < 0) throw std::invalid_argument("make_schedule: iterations must be >= 0");
  Schedule s;
  s.scheme = scheme;
  s.iterations = iterations;
  switch (scheme) {
    case Scheme::Synchronous:
      s.mu = 1.0;
      break;
    case Scheme::AsyncUniformNode: {
      s.mu = 1.0 / g.n();
      Rng rng(seed);
      s.nodes.resize(iterations);
      for (int k = 0; k < iterations; ++k) s.nodes[k] = rng.uniform_int(g.n());
      break;
    }
    case Scheme::ExplicitMask:
      throw std::invalid_argument("make_schedule: explicit masks come from make_explicit_schedule");
  }
  return s;
}

Schedule make_explicit_schedule(std::vector<std::vector<std::uint8_t>> masks, double mu) {
  Schedule s;
  s.scheme = Scheme::ExplicitMask;
  s.mu = mu;
  s.iterations = static_cast<int>(masks.size());
  s.masks = std::move(masks);
  return s;
}

Eigen::VectorXd local_x_solve(const CostModel& model, const Graph& g, int i,
                              const Eigen::VectorXd& z, const PdmmConfig& cfg) {
  const int d = model.d;
  Eigen::VectorXd zsum = Eigen::VectorXd::Zero(d);  // sum_j A_ij^T z_{i|j}
  for (int j : g.neighbors(i)) {
    const int slot = g.directed_slot(i, j);
    zsum += edge_sign(i, j) * z.segment(slot * d, d);
  }
  const double cd = cfg.c * g.degree(i);
  if (const auto* cm = std::get_if<ConsensusModel>(&model.costs)) {
    return (2.0 * cm->s.col(i) - zsum) / (2.0 + cd);
  }
  const auto& lr = std::get<LinearRegressionModel>(model.costs);
  const Eigen::MatrixXd normal =
      2.0 * lr.A[i].transpose() * lr.A[i] + cd * Eigen::MatrixXd::Identity(d, d);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::logic_error("local_x_solve: singular local system");  // impossible for c > 0
  return ldlt.solve(2.0 * lr.A[i].transpose() * lr.b[i] - zsum);
}

void stochastic_step(PdmmState& state, const CostModel& model, const Graph& g,
                     const PdmmConfig& cfg, std::span<const std::uint8_t> slot_mask,
                     StepScratch& scratch, std::vector<TranscriptMessage>* messages) {
  cfg.validate();
  const int d = model.d, m = g.m();
  const int slots = 2 * m;
  if (static_cast<int>(slot_mask.size()) != slots)
    throw std::invalid_argument("stochastic_step: mask must have one flag per directed slot");
  if (state.z.size() != slots * d || state.x.size() != g.n() * d)
    throw std::invalid_argument("stochastic_step: state dimensions do not match graph/model");

  scratch.writer_active.assign(g.n(), 0);
  scratch.active_slots.clear();
  for (int s = 0; s < slots; ++s) {
    if (slot_mask[s]) {
      scratch.active_slots.push_back(s);
      scratch.writer_active[g.slot_writer(s)] = 1;
    }
  }
  // x update at writing nodes only, all from the pre-step z
  for (int i = 0; i < g.n(); ++i) {
    if (scratch.writer_active[i])
      state.x.segment(i * d, d) = local_x_solve(model, g, i, state.z, cfg);
  }
  // deltas from the pre-step z, applied after all reads
  scratch.delta.resize(static_cast<Eigen::Index>(scratch.active_slots.size()) * d);
  for (std::size_t a = 0; a < scratch.active_slots.size(); ++a) {
    const int s = scratch.active_slots[a];
    const int r = Graph::partner_slot(s, m);
    const int w = g.slot_writer(s), h = g.slot_holder(s);
    scratch.delta.segment(a * d, d) =
        cfg.theta * (state.z.segment(r * d, d) +
                     2.0 * cfg.c * edge_sign(w, h) * state.x.segment(w * d, d) -
                     state.z.segment(s * d, d));
  }
  state.k += 1;
  for (std::size_t a = 0; a < scratch.active_slots.size(); ++a) {
    const int s = scratch.active_slots[a];
    state.z.segment(s * d, d) += scratch.delta.segment(a * d, d);
    if (messages)
      messages->push_back(TranscriptMessage{state.k, g.slot_holder(s), g.slot_writer(s),
                                            scratch.delta.segment(a * d, d)});
  }
}

void stochastic_step(PdmmState& state, const CostModel& model, const Graph& g,
                     const PdmmConfig& cfg, std::span<const std::uint8_t> slot_mask,
                     std::vector<TranscriptMessage>* messages) {
  StepScratch scratch;
  stochastic_step(state, model, g, cfg, slot_mask, scratch, messages);
}

void sync_step(PdmmState& state, const CostModel& model, const Graph& g, const PdmmConfig& cfg,
               std::vector<TranscriptMessage>* messages) {
  const std::vector<std::uint8_t> full(2 * g.m(), 1);
  stochastic_step(state, model, g, cfg, full, messages);
}

Eigen::VectorXd replay_transcript(const Transcript& t, const Graph& g, int d, int up_to_k) {
  Eigen::VectorXd z = t.secure_init;
  for (const auto& msg : t.messages) {
    if (up_to_k >= 0 && msg.k > up_to_k) break;
    const int slot = g.directed_slot(msg.holder, msg.peer);
    z.segment(slot * d, d) += msg.delta;
  }
  return z;
}

RunResult run(const CostModel& model, const Graph& g, const PdmmConfig& cfg,
              const Schedule& schedule, const PdmmState& initial) {
  cfg.validate();
  const int d = model.d;
  if (initial.z.size() != 2 * g.m() * d || initial.x.size() != g.n() * d)
    throw std::invalid_argument("run: initial state dimensions do not match graph/model");
  if (schedule.scheme == Scheme::AsyncUniformNode &&
      static_cast<int>(schedule.nodes.size()) < cfg.iterations)
    throw std::invalid_argument("run: schedule shorter than the iteration budget");
  if (schedule.scheme == Scheme::ExplicitMask &&
      static_cast<int>(schedule.masks.size()) < cfg.iterations)
    throw std::invalid_argument("run: schedule shorter than the iteration budget");

  RunResult result;
  result.transcript.secure_init = initial.z;
  PdmmState state = initial;
  result.trajectory.reserve(cfg.iterations + 1);
  simulate(
      model, g, cfg, schedule, state, cfg.iterations,
      [&](const PdmmState& st) { result.trajectory.push_back(st); }, &result.transcript.messages);
  return result;
}

}  // namespace pdmmlab
