#pragma once
// Message-level simulation of the cloud-coordinated iteration: N agent nodes
// holding private objectives and box sets, one cloud node holding the coupling
// constraint and the dual iterate. Each round is uplink (states), cloud-side
// perturbed products, downlink (one vector per agent), local primal steps and
// the cloud dual update. The arithmetic is the solver's own step kernel, so a
// zero-noise simulation reproduces solve() bit for bit.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dpvi/privacy.hpp"
#include "dpvi/problem.hpp"
#include "dpvi/solver.hpp"
#include "dpvi/types.hpp"

namespace dpvi {

struct AgentNode {
  int id = 0;  // 1-based, fixed ordering
  const ObjectiveTerm* objective = nullptr;
  const BoxSet* box = nullptr;
  Vec state;

  // Local update given the downlink payload (g_{x_i} + w_i)^T mu. Returns the
  // squared norm of the pre-projection point.
  double apply_step(const Vec& payload, double alpha, double gamma);
};

struct CloudNode {
  const ConstraintFunction* constraint = nullptr;
  DualSet dual_set;
  Vec mu;
  NoiseChannelSet channels;
  std::uint64_t master_seed = 0;
  bool noisy_mu = true;
};

struct TimestepLog {
  std::int64_t k = 0;
  int uplink_count = 0;    // one state vector per agent
  int downlink_count = 0;  // one payload vector per agent
  std::vector<int> downlink_dims;
  Vec mu_after;
  double raw_norm2 = 0.0;  // squared pre-projection norm, divergence guard
  // Filled only in debug mode.
  std::vector<Vec> downlink_payloads;
  std::vector<Vec> downlink_payloads_exact;
  Vec ghat;
  Vec g_exact;
};

// One synchronous round at iteration k. Returns the log entry for the round.
TimestepLog run_round(std::vector<AgentNode>& agents, CloudNode& cloud, std::int64_t k,
                      double alpha, double gamma, bool debug = false);

struct SimResult {
  RunTrace trace;
  std::vector<TimestepLog> logs;  // empty unless keep_logs
};

// Full simulation: builds the nodes from the problem spec, calibrates the
// cloud's channels from the policy and runs `rounds` rounds under the
// config's schedule and recording cadence.
SimResult simulate(const ProblemSpec& spec, const SolverConfig& config,
                   const PrivacyPolicy& policy, std::uint64_t seed, std::int64_t rounds,
                   const ReferenceSolution* ref = nullptr, bool keep_logs = false,
                   bool debug = false);

// Plain-text event log, one line per message: k, direction, from, to, length.
void write_event_log(std::ostream& out, const std::vector<TimestepLog>& logs);

}  // namespace dpvi
