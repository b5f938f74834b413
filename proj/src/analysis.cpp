#include "dpvi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpvi/rng.hpp"

namespace dpvi {

namespace {

constexpr long kChunk = 8192;

double theta_term(const AnalysisConfig& cfg, double alpha, double gamma) {
  const double ga = gamma * alpha;
  return 1.0 - ga * (2.0 - ga - (gamma / alpha) * cfg.L_G * cfg.L_G - 2.0 * gamma * cfg.L_G);
}

double rho_term(const AnalysisConfig& cfg, const StepSchedule& sched, std::int64_t k,
                double alpha, double gamma) {
  if (k <= 1) return 0.0;
  const double drop = (sched.alpha(k - 1) - alpha) / alpha;
  const double ga = gamma * alpha;
  return cfg.M_xi * cfg.M_xi * drop * drop * ((1.0 + ga) / ga);
}

void fill_terms(const AnalysisConfig& cfg, const StepSchedule& sched, std::int64_t k,
                SequenceTerms& out) {
  const double alpha = sched.alpha(k);
  const double gamma = sched.gamma(k);
  const double th = theta_term(cfg, alpha, gamma);
  const double rho = rho_term(cfg, sched, k, alpha, gamma);
  const std::size_t i = static_cast<std::size_t>(k - 1);
  out.theta_k[i] = th;
  out.rho_k[i] = rho;
  out.tau_k[i] = gamma * alpha * cfg.theta;
  out.sigma_k[i] = th * rho + gamma * gamma * cfg.K_w;
}

SequenceTerms alloc_terms(std::int64_t k_max) {
  if (k_max < 2) throw ValidationError("sequence_terms: k_max must be >= 2");
  SequenceTerms t;
  t.k_max = k_max;
  t.theta_k.assign(k_max, 0.0);
  t.rho_k.assign(k_max, 0.0);
  t.tau_k.assign(k_max, 0.0);
  t.sigma_k.assign(k_max, 0.0);
  return t;
}

}  // namespace

SequenceTerms sequence_terms(const AnalysisConfig& cfg, const StepSchedule& sched,
                             std::int64_t k_max) {
  SequenceTerms t = alloc_terms(k_max);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t k = 1; k <= k_max; ++k) fill_terms(cfg, sched, k, t);
  return t;
}

SequenceTerms sequence_terms_serial(const AnalysisConfig& cfg, const StepSchedule& sched,
                                    std::int64_t k_max) {
  SequenceTerms t = alloc_terms(k_max);
  for (std::int64_t k = 1; k <= k_max; ++k) fill_terms(cfg, sched, k, t);
  return t;
}

namespace {

constexpr long kZetaTerms = 1000000;

double zeta_chunk(double p, long lo, long hi) {
  double s = 0.0;
  for (long k = lo; k < hi; ++k) s += std::pow(static_cast<double>(k), -p);
  return s;
}

double zeta_tail(double p) {
  const double N = static_cast<double>(kZetaTerms);
  double t = std::pow(N, 1.0 - p) / (p - 1.0);
  t += 0.5 * std::pow(N, -p);
  t += p * std::pow(N, -p - 1.0) / 12.0;
  t -= p * (p + 1.0) * (p + 2.0) * std::pow(N, -p - 3.0) / 720.0;
  return t;
}

}  // namespace

double zeta_fn(double p) {
  if (!(p > 1.0)) throw ValidationError("zeta_fn: argument must exceed 1");
  const long nchunks = (kZetaTerms - 1 + kChunk - 1) / kChunk;
  std::vector<double> partial(nchunks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long ci = 0; ci < nchunks; ++ci) {
    const long lo = 1 + ci * kChunk;
    const long hi = std::min<long>(kZetaTerms, lo + kChunk);
    partial[ci] = zeta_chunk(p, lo, hi);
  }
  double s = 0.0;
  for (long ci = 0; ci < nchunks; ++ci) s += partial[ci];
  return s + zeta_tail(p);
}

double zeta_fn_serial(double p) {
  if (!(p > 1.0)) throw ValidationError("zeta_fn: argument must exceed 1");
  const long nchunks = (kZetaTerms - 1 + kChunk - 1) / kChunk;
  double s = 0.0;
  for (long ci = 0; ci < nchunks; ++ci) {
    const long lo = 1 + ci * kChunk;
    const long hi = std::min<long>(kZetaTerms, lo + kChunk);
    s += zeta_chunk(p, lo, hi);
  }
  return s + zeta_tail(p);
}

double sigma_total_bound(const AnalysisConfig& cfg, const StepSchedule& sched) {
  const double a1 = 2.0 * sched.c2;
  const double a2 = 2.0 - sched.c1 - sched.c2;
  const double a3 = 3.0 - sched.c1 - sched.c2;
  if (a1 <= 1.0 || a2 <= 1.0 || a3 <= 1.0) return std::numeric_limits<double>::infinity();
  const double gb = sched.gamma_bar, ab = sched.alpha_bar;
  const double c1 = sched.c1;
  double total = gb * gb * cfg.K_w * zeta_fn(a1);
  total += (2.0 * c1 * c1 / (ab * gb)) * zeta_fn(a2);
  total += (2.0 * (c1 * c1 * c1 + c1 * c1) / (ab * gb)) * zeta_fn(a3);
  return total;
}

double sigma_tail_bound(const AnalysisConfig& cfg, const StepSchedule& sched,
                        std::int64_t from_k) {
  if (from_k < 1) throw ValidationError("sigma_tail_bound: from_k must be >= 1");
  const double total = sigma_total_bound(cfg, sched);
  double partial = 0.0;
  for (std::int64_t k = 1; k < from_k; ++k) {
    const double alpha = sched.alpha(k);
    const double gamma = sched.gamma(k);
    partial += theta_term(cfg, alpha, gamma) * rho_term(cfg, sched, k, alpha, gamma) +
               gamma * gamma * cfg.K_w;
  }
  return total - partial;
}

double expected_error_bound(const Vec& tau, const Vec& sigma, double e1, std::int64_t k) {
  if (k < 1) throw ValidationError("expected_error_bound: k must be >= 1");
  if (tau.size() != sigma.size())
    throw ValidationError("expected_error_bound: tau/sigma size mismatch");
  if (static_cast<std::size_t>(k - 1) > tau.size())
    throw ValidationError("expected_error_bound: not enough coefficients for this k");
  if (k == 1) return e1;
  const std::size_t terms = static_cast<std::size_t>(k - 1);
  for (std::size_t i = 0; i < terms; ++i)
    if (!(tau[i] >= 0.0 && tau[i] <= 1.0))
      throw ValidationError("expected_error_bound: tau must lie in [0, 1]");

  // ls[m] = sum_{i=m+1}^{k-1} log(1 - tau_i); suffix form keeps exact zero
  // factors (tau = 1) out of any log difference.
  Vec ls(terms + 1, 0.0);
  for (std::size_t m = terms; m-- > 0;) ls[m] = ls[m + 1] + std::log1p(-tau[m]);

  double e = std::exp(ls[0]) * e1;
  for (std::size_t m = 1; m <= terms; ++m) e += sigma[m - 1] * std::exp(ls[m]);
  return e;
}

double expected_error_bound(const AnalysisConfig& cfg, const StepSchedule& sched,
                            std::int64_t k) {
  if (k < 1) throw ValidationError("expected_error_bound: k must be >= 1");
  const double e1 = cfg.D_z * cfg.D_z;
  if (k == 1) return e1;
  const std::size_t terms = static_cast<std::size_t>(k - 1);
  Vec tau(terms), sigma(terms);
  for (std::size_t i = 0; i < terms; ++i) {
    const std::int64_t kk = static_cast<std::int64_t>(i) + 1;
    const double alpha = sched.alpha(kk);
    const double gamma = sched.gamma(kk);
    tau[i] = gamma * alpha * cfg.theta;
    sigma[i] = theta_term(cfg, alpha, gamma) * rho_term(cfg, sched, kk, alpha, gamma) +
               gamma * gamma * cfg.K_w;
  }
  return expected_error_bound(tau, sigma, e1, k);
}

double convergence_probability(const AnalysisConfig& cfg, const StepSchedule& sched,
                               double eps_ball, std::int64_t k,
                               std::optional<double> observed_Ek) {
  if (!(eps_ball > 0.0)) throw ValidationError("convergence_probability: eps_ball must be > 0");
  const double ek = observed_Ek ? *observed_Ek : expected_error_bound(cfg, sched, k);
  const double tail = sigma_tail_bound(cfg, sched, k);
  return 1.0 - (ek + tail) / eps_ball;
}

std::vector<TradeoffPoint> tradeoff_curve(const ProblemSpec& spec, const PrivacyPolicy& policy,
                                          const DualSet& dual_set, const StepSchedule& sched,
                                          const std::vector<double>& epsilons) {
  if (policy.mechanism != Mechanism::Laplace)
    throw ValidationError("tradeoff_curve: derived for the laplace mechanism");
  const SensitivityBundle sens = compute_sensitivities(spec.constraint, policy);

  // W collects every variance numerator; only the 1/eps^2 factor moves.
  const double R = dual_set.radius;
  double W = 0.0;
  for (int i = 0; i < spec.num_agents(); ++i) {
    const double di = sens.delta_blocks.at(i + 1);
    W += R * R * spec.boxes[i].dim() * 2.0 * di * di;
  }
  W += spec.constraint.m * 2.0 * sens.delta_g * sens.delta_g;

  std::vector<TradeoffPoint> curve;
  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw ValidationError("tradeoff_curve: epsilon must be positive");
    TradeoffPoint pt;
    pt.epsilon = eps;
    pt.K_w = W / (eps * eps);
    pt.penalty = sched.gamma_bar * sched.gamma_bar * pt.K_w;
    curve.push_back(pt);
  }
  return curve;
}

namespace {

Lemma2Report lemma2_flags(const Vec& tau, const Vec& sigma) {
  if (tau.empty() || tau.size() != sigma.size())
    throw ValidationError("lemma2: tau and sigma must be nonempty and equally sized");
  Lemma2Report r;
  r.tau_in_range = true;
  r.sigma_nonneg = true;
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0 && tau[i] <= 1.0)) r.tau_in_range = false;
    if (!(sigma[i] >= 0.0)) r.sigma_nonneg = false;
    tau_sum += tau[i];
  }
  r.tau_sum_large = tau_sum > 5.0;
  if (tau.front() > 0.0 && tau.back() > 0.0)
    r.ratio_decreases = (sigma.back() / tau.back()) < (sigma.front() / tau.front());
  r.hypotheses_hold = r.tau_in_range && r.sigma_nonneg && r.tau_sum_large && r.ratio_decreases;
  return r;
}

double lemma2_trial(const Vec& tau, const Vec& sigma, std::uint64_t seed, long trial) {
  double v = 1.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double u = uniform01(seed, static_cast<std::uint64_t>(trial),
                               static_cast<std::uint64_t>(i) + 1, 0);
    v = (1.0 - tau[i]) * v + sigma[i] * u;
  }
  return v;
}

}  // namespace

Lemma2Report lemma2_monte_carlo_check(const Vec& tau, const Vec& sigma, long trials,
                                      std::uint64_t seed) {
  if (trials < 1) throw ValidationError("lemma2: trials must be >= 1");
  Lemma2Report r = lemma2_flags(tau, sigma);
  const long nchunks = (trials + kChunk - 1) / kChunk;
  std::vector<double> partial(nchunks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long ci = 0; ci < nchunks; ++ci) {
    const long lo = ci * kChunk;
    const long hi = std::min(trials, lo + kChunk);
    double s = 0.0;
    for (long t = lo; t < hi; ++t) s += lemma2_trial(tau, sigma, seed, t);
    partial[ci] = s;
  }
  double total = 0.0;
  for (long ci = 0; ci < nchunks; ++ci) total += partial[ci];
  r.mean_final = total / static_cast<double>(trials);
  r.decayed = r.mean_final <= 0.01 * r.v0;
  return r;
}

Lemma2Report lemma2_monte_carlo_check_serial(const Vec& tau, const Vec& sigma, long trials,
                                             std::uint64_t seed) {
  if (trials < 1) throw ValidationError("lemma2: trials must be >= 1");
  Lemma2Report r = lemma2_flags(tau, sigma);
  const long nchunks = (trials + kChunk - 1) / kChunk;
  double total = 0.0;
  for (long ci = 0; ci < nchunks; ++ci) {
    const long lo = ci * kChunk;
    const long hi = std::min(trials, lo + kChunk);
    double s = 0.0;
    for (long t = lo; t < hi; ++t) s += lemma2_trial(tau, sigma, seed, t);
    total += s;
  }
  r.mean_final = total / static_cast<double>(trials);
  r.decayed = r.mean_final <= 0.01 * r.v0;
  return r;
}

ProofThresholds proof_thresholds(double L_G, const StepSchedule& sched, std::int64_t horizon) {
  if (horizon < 1) throw ValidationError("proof_thresholds: horizon must be >= 1");
  AnalysisConfig tmp;
  tmp.L_G = L_G;

  ProofThresholds out;
  out.M = 0;
  out.M_hat = 0;
  bool hat_found = false;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    const double alpha = sched.alpha(k);
    const double gamma = sched.gamma(k);
    const double ga = gamma * alpha;
    if (!hat_found && ga <= 1.0) {
      out.M_hat = k;
      hat_found = true;
    }
    if (!out.m_found) {
      const double th = theta_term(tmp, alpha, gamma);
      if (th * (1.0 + ga) < 1.0) {
        out.M = k;
        out.m_found = true;
        const double theta_max = (1.0 - th * (1.0 + ga)) / ga;
        out.theta = 0.5 * std::min(theta_max, 1.0);
      }
    }
    if (hat_found && out.m_found) break;
  }
  if (!out.m_found) out.theta = 0.5;
  return out;
}

double aggregate_noise_bound(const NoiseChannelSet& channels, double radius) {
  double kw = 0.0;
  for (const auto& ch : channels.blocks)
    kw += radius * radius * ch.cols * ch.entry_variance();
  kw += channels.g_channel.rows * channels.g_channel.entry_variance();
  return kw;
}

AnalysisConfig make_analysis_config(const ProblemSpec& spec, const DualSet& dual_set,
                                    const NoiseChannelSet& channels, double L_G) {
  AnalysisConfig cfg;
  cfg.L_G = L_G;
  cfg.M_xi = sup_state_norm(spec, dual_set);
  cfg.D_z = state_diameter(spec, dual_set);
  cfg.K_w = aggregate_noise_bound(channels, dual_set.radius);
  cfg.theta = 0.5;
  return cfg;
}

}  // namespace dpvi
