#pragma once
// The regularized projection iteration on Z = X x M: assembles the monotone
// saddle-point map G(z) = (f_x + g_x^T mu, -g(x)), runs the deterministic and
// the privatized iteration, measures KKT residuals, and computes a
// high-accuracy reference solution.
//
// The per-agent update helpers here are the single implementation shared with
// the cloud simulator, which is what makes ensemble runs and simulated runs
// bit-for-bit identical.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dpvi/geometry.hpp"
#include "dpvi/privacy.hpp"
#include "dpvi/problem.hpp"
#include "dpvi/schedule.hpp"
#include "dpvi/types.hpp"

namespace dpvi {

struct SaddleMap {
  const ProblemSpec* spec = nullptr;
  DualSet dual_set;

  // G(z) = (f_x(x) + g_x(x)^T mu, -g(x)).
  std::pair<Vec, Vec> eval(const EnsembleState& z) const;
};

// Natural-map residual |z - P_Z[z - G(z)]|_2; zero exactly at solutions.
double kkt_residual(const EnsembleState& z, const SaddleMap& map);

// Sampled difference-quotient estimate of the Lipschitz constant of G over Z.
double estimate_map_lipschitz(const SaddleMap& map, long samples, std::uint64_t seed);
double estimate_map_lipschitz_serial(const SaddleMap& map, long samples, std::uint64_t seed);

struct SolverConfig {
  StepSchedule schedule;
  std::int64_t max_iters = 100000;
  double fixed_point_tol = 0.0;    // > 0 enables early stop on noise-free runs
  std::int64_t record_every = 10;  // cadence beyond dense_until
  std::int64_t dense_until = 1000;
  std::int64_t kkt_every = 0;  // 0 disables per-row residuals
  bool noisy_mu = true;        // dual update sees the privatized constraint value
  std::optional<EnsembleState> initial;  // default: all zeros
};

struct ReferenceSolution {
  Vec x0;
  Vec mu0;
  double kkt_res = std::numeric_limits<double>::infinity();
  double radius = 0.0;  // dual radius R of the set it was computed on
};

struct TraceRow {
  std::int64_t k = 0;
  double primal_err = std::numeric_limits<double>::quiet_NaN();
  double dual_err = std::numeric_limits<double>::quiet_NaN();
  double kkt = std::numeric_limits<double>::quiet_NaN();
};

struct RunTrace {
  std::vector<TraceRow> rows;
  EnsembleState final_state;
  std::int64_t iters = 0;
  std::uint64_t seed = 0;
  bool has_reference = false;
  bool has_kkt = false;
  double final_kkt = std::numeric_limits<double>::quiet_NaN();
  bool stopped_at_fixed_point = false;
};

// Downlink product (g_{x_i}(x) + w_i)^T mu for one agent, summed over
// constraints in fixed ascending order. ch == nullptr means no noise. When
// pre_noise is given the unperturbed product is stored there as well.
Vec noisy_block_payload(const Matrix& jac, int col0, int ni, const NoiseChannel* ch,
                        std::uint64_t master_seed, std::int64_t k, const Vec& mu,
                        Vec* pre_noise = nullptr);

// x_i <- P_{X_i}[x_i - gamma (grad_f + payload + alpha x_i)]. raw_out, when
// given, receives the pre-projection point (divergence diagnostics).
Vec agent_primal_step(const Vec& x_i, const Vec& payload, double alpha, double gamma,
                      const Vec& grad_f, const BoxSet& box, Vec* raw_out = nullptr);

// mu <- P_M[mu + gamma (ghat - alpha mu)].
Vec dual_update(const Vec& mu, const Vec& ghat, double alpha, double gamma,
                const DualSet& set, Vec* raw_out = nullptr);

// Per-step record of what the noise did, for audits and tests.
struct NoiseStepRecord {
  std::vector<Vec> payload_pre;   // exact g_{x_i}^T mu per agent
  std::vector<Vec> payload_post;  // what agents actually received
  Vec g_pre;
  Vec g_post;
};

// One iteration z -> P_Z[z - gamma (G(z) + alpha z + w)]. channels == nullptr
// or an inactive set runs the noise-free update through the same arithmetic.
// raw_norm2, when given, receives the squared norm of the pre-projection
// iterate, which is what the divergence guard watches.
EnsembleState step_iteration(const EnsembleState& z, const ProblemSpec& spec,
                             const DualSet& dual_set, double alpha, double gamma,
                             const NoiseChannelSet* channels, std::uint64_t master_seed,
                             std::int64_t k, bool noisy_mu = true,
                             NoiseStepRecord* record = nullptr, double* raw_norm2 = nullptr);

EnsembleState step_deterministic(const EnsembleState& z, const SaddleMap& map, double alpha,
                                 double gamma);

EnsembleState step_private(const EnsembleState& z, const SaddleMap& map, double alpha,
                           double gamma, const NoiseChannelSet& channels,
                           std::uint64_t master_seed, std::int64_t k, bool noisy_mu = true,
                           NoiseStepRecord* record = nullptr);

// Shared trace recording so solve() and simulate() emit identical rows:
// every iterate through dense_until, then every record_every-th, plus the
// final one.
bool should_record(std::int64_t k, std::int64_t max_iters, const SolverConfig& cfg);
TraceRow make_trace_row(std::int64_t k, const EnsembleState& z, const ReferenceSolution* ref,
                        const SaddleMap& map, const SolverConfig& cfg);

// Runs the iteration from z(0) (zeros unless configured), recording errors to
// the reference solution when one is supplied. Noise-free runs stop early
// when |z(k+1)-z(k)|_2 <= fixed_point_tol (if enabled).
RunTrace solve(const ProblemSpec& spec, const SolverConfig& config, const PrivacyPolicy& policy,
               std::uint64_t seed, const ReferenceSolution* ref = nullptr);

// Reference pipeline: a long noise-free run of the regularized iteration
// keeping the smallest-residual iterate, then a fixed-step extragradient
// polish stage that drives the residual down to target accuracy.
struct ReferenceOptions {
  StepSchedule schedule;
  std::int64_t run_iters = 1000000;
  std::int64_t check_every = 5000;
  double polish_gamma = 0.005;
  std::int64_t polish_iters = 300000;
  std::int64_t polish_check_every = 1000;
  double target_residual = 1e-6;
};
ReferenceSolution compute_reference_solution(const ProblemSpec& spec,
                                             const ReferenceOptions& opts = {});

// Lagrangian L(x, mu) = f(x) + mu^T g(x), for saddle-inequality checks.
double lagrangian(const ProblemSpec& spec, const Vec& x, const Vec& mu);

}  // namespace dpvi
