#include "dpvi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpvi/rng.hpp"

namespace dpvi {

std::pair<Vec, Vec> SaddleMap::eval(const EnsembleState& z) const {
  Vec gx = spec->objective_gradient(z.x);
  const Matrix J = spec->constraint.jacobian(z.x);
  for (int d = 0; d < J.cols; ++d) {
    double s = 0.0;
    for (int j = 0; j < J.rows; ++j) s += J(j, d) * z.mu[j];
    gx[d] += s;
  }
  Vec gmu = spec->constraint.eval(z.x);
  for (double& v : gmu) v = -v;
  return {std::move(gx), std::move(gmu)};
}

double kkt_residual(const EnsembleState& z, const SaddleMap& map) {
  const auto [Gx, Gmu] = map.eval(z);
  Vec px(z.x.size());
  for (std::size_t d = 0; d < z.x.size(); ++d) px[d] = z.x[d] - Gx[d];
  px = project_box(px, map.spec->full_box());
  Vec pmu(z.mu.size());
  for (std::size_t j = 0; j < z.mu.size(); ++j) pmu[j] = z.mu[j] - Gmu[j];
  pmu = project_dual(pmu, map.dual_set);
  return std::sqrt(dist2sq(z.x, px) + dist2sq(z.mu, pmu));
}

namespace {

Vec slice(const Vec& x, int first, int last) {
  return Vec(x.begin() + first, x.begin() + last);
}

// Uniform sample from {mu >= 0, |mu|_1 <= R} via m+1 exponentials.
Vec sample_dual_point(const DualSet& set, std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t t) {
  Vec e(set.m + 1);
  double total = 0.0;
  for (int j = 0; j <= set.m; ++j) {
    e[j] = exponential_sample(seed, stream, t, static_cast<std::uint64_t>(j));
    total += e[j];
  }
  Vec mu(set.m);
  for (int j = 0; j < set.m; ++j) mu[j] = set.radius * e[j] / total;
  return mu;
}

Vec sample_box_point(const BoxSet& box, std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t t) {
  Vec x(box.dim());
  for (int d = 0; d < box.dim(); ++d) {
    const double u = uniform01(seed, stream, t, static_cast<std::uint64_t>(d));
    x[d] = box.lower[d] + (box.upper[d] - box.lower[d]) * u;
  }
  return x;
}

double map_pair_ratio(const SaddleMap& map, const BoxSet& full, std::uint64_t seed,
                      std::uint64_t t) {
  EnsembleState a{sample_box_point(full, seed, 0, t), sample_dual_point(map.dual_set, seed, 2, t)};
  EnsembleState b{sample_box_point(full, seed, 1, t), sample_dual_point(map.dual_set, seed, 3, t)};
  const double den = std::sqrt(dist2sq(a.x, b.x) + dist2sq(a.mu, b.mu));
  if (den == 0.0) return 0.0;
  const auto [gax, gamu] = map.eval(a);
  const auto [gbx, gbmu] = map.eval(b);
  return std::sqrt(dist2sq(gax, gbx) + dist2sq(gamu, gbmu)) / den;
}

}  // namespace

double estimate_map_lipschitz(const SaddleMap& map, long samples, std::uint64_t seed) {
  if (samples < 2) throw ValidationError("estimate_map_lipschitz: need at least 2 samples");
  const BoxSet full = map.spec->full_box();
  double best = 0.0;
#ifdef _OPENMP
#pragma omp parallel for reduction(max : best) schedule(static)
#endif
  for (long t = 0; t < samples; ++t)
    best = std::max(best, map_pair_ratio(map, full, seed, static_cast<std::uint64_t>(t)));
  return best;
}

double estimate_map_lipschitz_serial(const SaddleMap& map, long samples, std::uint64_t seed) {
  if (samples < 2) throw ValidationError("estimate_map_lipschitz: need at least 2 samples");
  const BoxSet full = map.spec->full_box();
  double best = 0.0;
  for (long t = 0; t < samples; ++t)
    best = std::max(best, map_pair_ratio(map, full, seed, static_cast<std::uint64_t>(t)));
  return best;
}

Vec noisy_block_payload(const Matrix& jac, int col0, int ni, const NoiseChannel* ch,
                        std::uint64_t master_seed, std::int64_t k, const Vec& mu,
                        Vec* pre_noise) {
  Vec payload(ni, 0.0);
  if (pre_noise) pre_noise->assign(ni, 0.0);
  for (int l = 0; l < ni; ++l) {
    double s = 0.0;
    double exact = 0.0;
    for (int j = 0; j < jac.rows; ++j) {
      const double w = ch ? channel_entry(*ch, master_seed, k,
                                          static_cast<std::uint64_t>(j) * ni + l)
                          : 0.0;
      s += (jac(j, col0 + l) + w) * mu[j];
      if (pre_noise) exact += jac(j, col0 + l) * mu[j];
    }
    payload[l] = s;
    if (pre_noise) (*pre_noise)[l] = exact;
  }
  return payload;
}

Vec agent_primal_step(const Vec& x_i, const Vec& payload, double alpha, double gamma,
                      const Vec& grad_f, const BoxSet& box, Vec* raw_out) {
  Vec raw(x_i.size());
  for (std::size_t d = 0; d < x_i.size(); ++d)
    raw[d] = x_i[d] - gamma * (grad_f[d] + payload[d] + alpha * x_i[d]);
  if (raw_out) *raw_out = raw;
  return project_box(raw, box);
}

Vec dual_update(const Vec& mu, const Vec& ghat, double alpha, double gamma,
                const DualSet& set, Vec* raw_out) {
  Vec raw(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j)
    raw[j] = mu[j] + gamma * (ghat[j] - alpha * mu[j]);
  if (raw_out) *raw_out = raw;
  return project_dual(raw, set);
}

EnsembleState step_iteration(const EnsembleState& z, const ProblemSpec& spec,
                             const DualSet& dual_set, double alpha, double gamma,
                             const NoiseChannelSet* channels, std::uint64_t master_seed,
                             std::int64_t k, bool noisy_mu, NoiseStepRecord* record,
                             double* raw_norm2) {
  const Matrix J = spec.constraint.jacobian(z.x);
  const Vec g = spec.constraint.eval(z.x);
  const int N = spec.num_agents();

  if (record) {
    record->payload_pre.assign(N, {});
    record->payload_post.assign(N, {});
    record->g_pre = g;
  }
  if (raw_norm2) *raw_norm2 = 0.0;

  EnsembleState out;
  out.x.reserve(z.x.size());
  Vec raw;
  for (int i = 0; i < N; ++i) {
    const auto [col0, col1] = spec.constraint.agent_blocks[i];
    const int ni = col1 - col0;
    const NoiseChannel* ch = channels ? &channels->blocks[i] : nullptr;
    Vec payload = noisy_block_payload(J, col0, ni, ch, master_seed, k, z.mu,
                                      record ? &record->payload_pre[i] : nullptr);
    if (record) record->payload_post[i] = payload;

    const Vec xi = slice(z.x, col0, col1);
    const Vec gi = spec.objectives[i].grad(xi);
    const Vec xin = agent_primal_step(xi, payload, alpha, gamma, gi, spec.boxes[i],
                                      raw_norm2 ? &raw : nullptr);
    if (raw_norm2) *raw_norm2 += norm2sq(raw);
    out.x.insert(out.x.end(), xin.begin(), xin.end());
  }

  Vec ghat(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = (channels && noisy_mu)
                         ? channel_entry(channels->g_channel, master_seed, k,
                                         static_cast<std::uint64_t>(j))
                         : 0.0;
    ghat[j] = g[j] + w;
  }
  if (record) record->g_post = ghat;
  out.mu = dual_update(z.mu, ghat, alpha, gamma, dual_set, raw_norm2 ? &raw : nullptr);
  if (raw_norm2) *raw_norm2 += norm2sq(raw);
  return out;
}

EnsembleState step_deterministic(const EnsembleState& z, const SaddleMap& map, double alpha,
                                 double gamma) {
  return step_iteration(z, *map.spec, map.dual_set, alpha, gamma, nullptr, 0, 1);
}

EnsembleState step_private(const EnsembleState& z, const SaddleMap& map, double alpha,
                           double gamma, const NoiseChannelSet& channels,
                           std::uint64_t master_seed, std::int64_t k, bool noisy_mu,
                           NoiseStepRecord* record) {
  return step_iteration(z, *map.spec, map.dual_set, alpha, gamma, &channels, master_seed, k,
                        noisy_mu, record);
}

bool should_record(std::int64_t k, std::int64_t max_iters, const SolverConfig& cfg) {
  if (k <= cfg.dense_until) return true;
  if (cfg.record_every > 0 && k % cfg.record_every == 0) return true;
  return k == max_iters;
}

TraceRow make_trace_row(std::int64_t k, const EnsembleState& z, const ReferenceSolution* ref,
                        const SaddleMap& map, const SolverConfig& cfg) {
  TraceRow row;
  row.k = k;
  if (ref) {
    row.primal_err = dist2(z.x, ref->x0);
    row.dual_err = dist2(z.mu, ref->mu0);
  }
  if (cfg.kkt_every > 0 && k % cfg.kkt_every == 0) row.kkt = kkt_residual(z, map);
  return row;
}

namespace {

EnsembleState initial_state(const ProblemSpec& spec, const DualSet& dual_set,
                            const SolverConfig& config) {
  EnsembleState z;
  if (config.initial) {
    z = *config.initial;
    if (static_cast<int>(z.x.size()) != spec.total_dim() ||
        static_cast<int>(z.mu.size()) != spec.constraint.m)
      throw ValidationError("solve: initial state has the wrong dimensions");
  } else {
    z.x.assign(spec.total_dim(), 0.0);
    z.mu.assign(spec.constraint.m, 0.0);
  }
  return project_ensemble(z, spec, dual_set);
}

void check_solver_config(const SolverConfig& config) {
  if (config.max_iters < 1) throw ValidationError("solve: need at least one iteration");
  if (config.record_every < 1) throw ValidationError("solve: record_every must be >= 1");
  if (config.dense_until < 0) throw ValidationError("solve: dense_until must be >= 0");
  if (config.kkt_every < 0) throw ValidationError("solve: kkt_every must be >= 0");
}

}  // namespace

RunTrace solve(const ProblemSpec& spec, const SolverConfig& config, const PrivacyPolicy& policy,
               std::uint64_t seed, const ReferenceSolution* ref) {
  spec.validate();
  check_solver_config(config);
  const ScheduleReport sched_report =
      validate(config.schedule, std::max<std::int64_t>(10, config.max_iters));
  if (!sched_report.valid())
    throw ValidationError("solve: schedule fails the decay conditions: " +
                          sched_report.describe());

  const DualSet dual_set = compute_dual_radius(spec);
  const SensitivityBundle sens = compute_sensitivities(spec.constraint, policy);
  const NoiseChannelSet channels = calibrate(policy, sens, spec);
  const SaddleMap map{&spec, dual_set};
  const double guard = 10.0 * std::max(1.0, sup_state_norm(spec, dual_set));

  RunTrace trace;
  trace.seed = seed;
  trace.has_reference = ref != nullptr;
  trace.has_kkt = config.kkt_every > 0;

  EnsembleState z = initial_state(spec, dual_set, config);
  trace.rows.push_back(make_trace_row(0, z, ref, map, config));

  std::int64_t k = 0;
  while (k < config.max_iters) {
    ++k;
    const auto [alpha, gamma] = step(config.schedule, k);
    double raw2 = 0.0;
    EnsembleState next =
        step_iteration(z, spec, dual_set, alpha, gamma, &channels, seed, k, config.noisy_mu,
                       nullptr, &raw2);
    if (!std::isfinite(raw2) || std::sqrt(raw2) > guard) {
      std::ostringstream os;
      os << "solve: iterate diverged at iteration " << k << " (pre-projection norm "
         << std::sqrt(raw2) << ", guard " << guard << ")";
      throw NumericError(os.str());
    }

    bool stop = false;
    if (!channels.active && config.fixed_point_tol > 0.0) {
      const double moved = std::sqrt(dist2sq(next.x, z.x) + dist2sq(next.mu, z.mu));
      stop = moved <= config.fixed_point_tol;
    }
    z = std::move(next);

    if (should_record(k, config.max_iters, config) || stop)
      trace.rows.push_back(make_trace_row(k, z, ref, map, config));
    if (stop) {
      trace.stopped_at_fixed_point = true;
      break;
    }
  }

  trace.iters = k;
  trace.final_state = z;
  trace.final_kkt = kkt_residual(z, map);
  return trace;
}

double lagrangian(const ProblemSpec& spec, const Vec& x, const Vec& mu) {
  return spec.objective_value(x) + dot(mu, spec.constraint.eval(x));
}

namespace {

EnsembleState project_state(const DualSet& set, const BoxSet& full, const Vec& x,
                            const Vec& mu) {
  EnsembleState z;
  z.x = project_box(x, full);
  z.mu = project_dual(mu, set);
  return z;
}

}  // namespace

ReferenceSolution compute_reference_solution(const ProblemSpec& spec,
                                             const ReferenceOptions& opts) {
  spec.validate();
  const DualSet dual_set = compute_dual_radius(spec);
  const SaddleMap map{&spec, dual_set};
  const BoxSet full = spec.full_box();

  EnsembleState z;
  z.x.assign(spec.total_dim(), 0.0);
  z.mu.assign(spec.constraint.m, 0.0);

  EnsembleState best = z;
  double best_res = kkt_residual(z, map);

  // Stage 1: the decaying-step iteration, keeping the best iterate seen.
  for (std::int64_t k = 1; k <= opts.run_iters; ++k) {
    const auto [alpha, gamma] = step(opts.schedule, k);
    z = step_iteration(z, spec, dual_set, alpha, gamma, nullptr, 0, k);
    if (k % opts.check_every == 0 || k == opts.run_iters) {
      const double res = kkt_residual(z, map);
      if (res < best_res) {
        best_res = res;
        best = z;
      }
    }
  }

  // Stage 2: fixed-step extragradient polish from the stage-1 incumbent.
  z = best;
  const double g = opts.polish_gamma;
  for (std::int64_t k = 1; k <= opts.polish_iters; ++k) {
    const auto [Gx, Gmu] = map.eval(z);
    Vec yx(z.x.size()), ymu(z.mu.size());
    for (std::size_t d = 0; d < z.x.size(); ++d) yx[d] = z.x[d] - g * Gx[d];
    for (std::size_t j = 0; j < z.mu.size(); ++j) ymu[j] = z.mu[j] - g * Gmu[j];
    const EnsembleState y = project_state(dual_set, full, yx, ymu);

    const auto [Hx, Hmu] = map.eval(y);
    Vec zx(z.x.size()), zmu(z.mu.size());
    for (std::size_t d = 0; d < z.x.size(); ++d) zx[d] = z.x[d] - g * Hx[d];
    for (std::size_t j = 0; j < z.mu.size(); ++j) zmu[j] = z.mu[j] - g * Hmu[j];
    z = project_state(dual_set, full, zx, zmu);

    if (k % opts.polish_check_every == 0 || k == opts.polish_iters) {
      const double res = kkt_residual(z, map);
      if (res < best_res) {
        best_res = res;
        best = z;
      }
      if (best_res <= opts.target_residual) break;
    }
  }

  ReferenceSolution ref;
  ref.x0 = best.x;
  ref.mu0 = best.mu;
  ref.kkt_res = best_res;
  ref.radius = dual_set.radius;
  return ref;
}

}  // namespace dpvi
