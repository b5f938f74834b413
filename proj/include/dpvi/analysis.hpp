#pragma once
// Convergence analysis for the noisy regularized iteration: the per-step
// contraction/drift/noise coefficients, the expected-error recursion and its
// closed-form bound, tail sums via the Riemann zeta function, convergence
// probability estimates, and the privacy-accuracy trade-off curve.

#include <cstdint>
#include <optional>
#include <vector>

#include "dpvi/geometry.hpp"
#include "dpvi/privacy.hpp"
#include "dpvi/problem.hpp"
#include "dpvi/schedule.hpp"
#include "dpvi/types.hpp"

namespace dpvi {

struct AnalysisConfig {
  double L_G = 0.0;   // Lipschitz constant of the saddle map
  double M_xi = 0.0;  // sup_Z |z|_2
  double D_z = 0.0;   // diameter of Z
  double K_w = 0.0;   // aggregate second moment of the injected noise
  double theta = 0.5;  // contraction split parameter in (0, 1)
};

// Coefficients of the error recursion e_{k+1} <= (1 - tau_k) e_k + sigma_k,
// stored for k = 1..k_max (index 0 holds k = 1; rho_1 = 0 by convention).
struct SequenceTerms {
  std::int64_t k_max = 0;
  Vec theta_k;
  Vec rho_k;
  Vec tau_k;
  Vec sigma_k;
};

SequenceTerms sequence_terms(const AnalysisConfig& cfg, const StepSchedule& sched,
                             std::int64_t k_max);
SequenceTerms sequence_terms_serial(const AnalysisConfig& cfg, const StepSchedule& sched,
                                    std::int64_t k_max);

// zeta(p) for p > 1 by partial sum plus Euler-Maclaurin tail.
double zeta_fn(double p);
double zeta_fn_serial(double p);

// Closed-form upper bound on sum_k sigma_k over all k >= 1.
double sigma_total_bound(const AnalysisConfig& cfg, const StepSchedule& sched);

// Bound on sum_{k >= from_k} sigma_k: total bound minus the exact partial sum.
double sigma_tail_bound(const AnalysisConfig& cfg, const StepSchedule& sched,
                        std::int64_t from_k);

// E_k from the recursion E_{k+1} = (1 - tau_k) E_k + sigma_k, E_1 = D_z^2,
// evaluated in log domain. The vector overload takes raw coefficient
// sequences (tau[i], sigma[i] for k = i+1).
double expected_error_bound(const AnalysisConfig& cfg, const StepSchedule& sched,
                            std::int64_t k);
double expected_error_bound(const Vec& tau, const Vec& sigma, double e1, std::int64_t k);

// P[|z_k - z*|^2 <= eps_ball] >= 1 - (E_k + tail_k) / eps_ball, reported
// as-is (can be negative when the bound is vacuous). An observed E_k may be
// substituted for the analytic one.
double convergence_probability(const AnalysisConfig& cfg, const StepSchedule& sched,
                               double eps_ball, std::int64_t k,
                               std::optional<double> observed_Ek = std::nullopt);

struct TradeoffPoint {
  double epsilon = 0.0;
  double K_w = 0.0;
  double penalty = 0.0;  // gamma_bar^2 K_w(eps), the additive noise-floor term
};

// Laplace-mechanism trade-off: K_w(eps) = W / eps^2 with W fixed by the
// sensitivities, so the penalty decays exactly as eps^-2.
std::vector<TradeoffPoint> tradeoff_curve(const ProblemSpec& spec, const PrivacyPolicy& policy,
                                          const DualSet& dual_set, const StepSchedule& sched,
                                          const std::vector<double>& epsilons);

struct Lemma2Report {
  bool hypotheses_hold = false;
  bool tau_in_range = false;
  bool sigma_nonneg = false;
  bool tau_sum_large = false;  // sum tau_k > 5 over the horizon
  bool ratio_decreases = false;
  bool decayed = false;  // empirical mean of v_K below 0.01 v_0
  double mean_final = 0.0;
  double v0 = 1.0;
};

// Monte Carlo check of the vanishing-sequence lemma: v_{k+1} =
// (1 - tau_k) v_k + sigma_k u_k with u_k uniform in [0, 1], averaged over
// trials.
Lemma2Report lemma2_monte_carlo_check(const Vec& tau, const Vec& sigma, long trials,
                                      std::uint64_t seed);
Lemma2Report lemma2_monte_carlo_check_serial(const Vec& tau, const Vec& sigma, long trials,
                                             std::uint64_t seed);

struct ProofThresholds {
  std::int64_t M = 0;      // first k with theta_k (1 + gamma_k alpha_k) < 1
  std::int64_t M_hat = 0;  // first k with alpha_k gamma_k <= 1
  double theta = 0.5;
  bool m_found = false;  // false: theta_k never entered the admissible band
};

// Scans the schedule for the iteration thresholds the error recursion needs.
// When the contraction band is never reached within the horizon the split
// parameter falls back to 0.5 and m_found stays false.
ProofThresholds proof_thresholds(double L_G, const StepSchedule& sched, std::int64_t horizon);

// Aggregate noise second moment K_w = R^2 sum_i n_i v_i + m v_g from the
// calibrated channels (v = per-entry variance).
double aggregate_noise_bound(const NoiseChannelSet& channels, double radius);

// Fills M_xi, D_z and K_w from the problem geometry and calibrated channels.
AnalysisConfig make_analysis_config(const ProblemSpec& spec, const DualSet& dual_set,
                                    const NoiseChannelSet& channels, double L_G);

}  // namespace dpvi
