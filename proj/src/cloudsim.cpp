#include "dpvi/cloudsim.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "dpvi/geometry.hpp"
#include "dpvi/schedule.hpp"

namespace dpvi {

double AgentNode::apply_step(const Vec& payload, double alpha, double gamma) {
  Vec raw;
  state = agent_primal_step(state, payload, alpha, gamma, objective->grad(state), *box, &raw);
  return norm2sq(raw);
}

TimestepLog run_round(std::vector<AgentNode>& agents, CloudNode& cloud, std::int64_t k,
                      double alpha, double gamma, bool debug) {
  const int N = static_cast<int>(agents.size());

  // uplink: the cloud assembles the stacked state
  Vec x;
  for (const auto& a : agents) x.insert(x.end(), a.state.begin(), a.state.end());

  const Matrix J = cloud.constraint->jacobian(x);
  const Vec g = cloud.constraint->eval(x);

  TimestepLog log;
  log.k = k;
  log.uplink_count = N;
  log.downlink_count = N;
  if (debug) {
    log.downlink_payloads.resize(N);
    log.downlink_payloads_exact.resize(N);
    log.g_exact = g;
  }

  // downlink: one perturbed product per agent, then the local steps
  for (int i = 0; i < N; ++i) {
    const auto [col0, col1] = cloud.constraint->agent_blocks[i];
    const int ni = col1 - col0;
    Vec payload = noisy_block_payload(J, col0, ni, &cloud.channels.blocks[i], cloud.master_seed,
                                      k, cloud.mu, debug ? &log.downlink_payloads_exact[i] : nullptr);
    if (debug) log.downlink_payloads[i] = payload;
    log.downlink_dims.push_back(ni);
    log.raw_norm2 += agents[i].apply_step(payload, alpha, gamma);
  }

  // cloud-side dual update on the privatized constraint value
  Vec ghat(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = cloud.noisy_mu ? channel_entry(cloud.channels.g_channel, cloud.master_seed,
                                                    k, static_cast<std::uint64_t>(j))
                                    : 0.0;
    ghat[j] = g[j] + w;
  }
  if (debug) log.ghat = ghat;
  Vec raw;
  cloud.mu = dual_update(cloud.mu, ghat, alpha, gamma, cloud.dual_set, &raw);
  log.raw_norm2 += norm2sq(raw);
  log.mu_after = cloud.mu;
  return log;
}

SimResult simulate(const ProblemSpec& spec, const SolverConfig& config,
                   const PrivacyPolicy& policy, std::uint64_t seed, std::int64_t rounds,
                   const ReferenceSolution* ref, bool keep_logs, bool debug) {
  if (rounds < 1) throw ValidationError("simulate: need at least one round");
  spec.validate();
  const ScheduleReport sched_report = validate(config.schedule, std::max<std::int64_t>(10, rounds));
  if (!sched_report.valid())
    throw ValidationError("simulate: schedule fails the decay conditions: " +
                          sched_report.describe());

  const DualSet dual_set = compute_dual_radius(spec);
  const SensitivityBundle sens = compute_sensitivities(spec.constraint, policy);
  const SaddleMap map{&spec, dual_set};
  const double guard = 10.0 * std::max(1.0, sup_state_norm(spec, dual_set));

  EnsembleState z0;
  if (config.initial) {
    z0 = *config.initial;
    if (static_cast<int>(z0.x.size()) != spec.total_dim() ||
        static_cast<int>(z0.mu.size()) != spec.constraint.m)
      throw ValidationError("simulate: initial state has the wrong dimensions");
  } else {
    z0.x.assign(spec.total_dim(), 0.0);
    z0.mu.assign(spec.constraint.m, 0.0);
  }
  z0 = project_ensemble(z0, spec, dual_set);

  std::vector<AgentNode> agents(spec.num_agents());
  for (int i = 0; i < spec.num_agents(); ++i) {
    const auto [col0, col1] = spec.constraint.agent_blocks[i];
    agents[i].id = i + 1;
    agents[i].objective = &spec.objectives[i];
    agents[i].box = &spec.boxes[i];
    agents[i].state = Vec(z0.x.begin() + col0, z0.x.begin() + col1);
  }
  CloudNode cloud;
  cloud.constraint = &spec.constraint;
  cloud.dual_set = dual_set;
  cloud.mu = z0.mu;
  cloud.channels = calibrate(policy, sens, spec);
  cloud.master_seed = seed;
  cloud.noisy_mu = config.noisy_mu;

  auto gather = [&]() {
    EnsembleState z;
    for (const auto& a : agents) z.x.insert(z.x.end(), a.state.begin(), a.state.end());
    z.mu = cloud.mu;
    return z;
  };

  SimResult result;
  result.trace.seed = seed;
  result.trace.has_reference = ref != nullptr;
  result.trace.has_kkt = config.kkt_every > 0;
  result.trace.rows.push_back(make_trace_row(0, gather(), ref, map, config));

  EnsembleState prev = z0;
  std::int64_t k = 0;
  while (k < rounds) {
    ++k;
    const auto [alpha, gamma] = step(config.schedule, k);
    TimestepLog log = run_round(agents, cloud, k, alpha, gamma, debug);
    if (!std::isfinite(log.raw_norm2) || std::sqrt(log.raw_norm2) > guard) {
      std::ostringstream os;
      os << "simulate: iterate diverged at round " << k << " (pre-projection norm "
         << std::sqrt(log.raw_norm2) << ", guard " << guard << ")";
      throw NumericError(os.str());
    }

    const EnsembleState z = gather();
    bool stop = false;
    if (!cloud.channels.active && config.fixed_point_tol > 0.0) {
      const double moved = std::sqrt(dist2sq(z.x, prev.x) + dist2sq(z.mu, prev.mu));
      stop = moved <= config.fixed_point_tol;
    }
    prev = z;

    if (should_record(k, rounds, config) || stop)
      result.trace.rows.push_back(make_trace_row(k, z, ref, map, config));
    if (keep_logs) result.logs.push_back(std::move(log));
    if (stop) {
      result.trace.stopped_at_fixed_point = true;
      break;
    }
  }

  result.trace.iters = k;
  result.trace.final_state = prev;
  result.trace.final_kkt = kkt_residual(prev, map);
  return result;
}

void write_event_log(std::ostream& out, const std::vector<TimestepLog>& logs) {
  out << "k,direction,from,to,length\n";
  for (const auto& log : logs) {
    for (int i = 0; i < log.uplink_count; ++i)
      out << log.k << ",up,agent" << (i + 1) << ",cloud," << log.downlink_dims[i] << "\n";
    for (int i = 0; i < log.downlink_count; ++i)
      out << log.k << ",down,cloud,agent" << (i + 1) << "," << log.downlink_dims[i] << "\n";
  }
}

}  // namespace dpvi
