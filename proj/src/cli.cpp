#include "dpvi/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "dpvi/analysis.hpp"
#include "dpvi/cloudsim.hpp"
#include "dpvi/geometry.hpp"
#include "dpvi/privacy.hpp"
#include "dpvi/rng.hpp"
#include "dpvi/solver.hpp"

namespace dpvi {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEstimateSeed = 2026;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const TraceRow& nearest_row(const RunTrace& trace, std::int64_t target) {
  const TraceRow* best = &trace.rows.front();
  for (const auto& row : trace.rows) {
    if (std::llabs(row.k - target) < std::llabs(best->k - target)) best = &row;
  }
  return *best;
}

// Fills in missing Lipschitz constants from sampled estimates when an active
// mechanism actually needs them.
void ensure_lipschitz_constants(ProblemSpec& spec, const PrivacyPolicy& policy, long samples,
                                std::vector<std::string>* notes) {
  if (policy.mechanism == Mechanism::None) return;
  const int p = policy.p;
  const BoxSet full = spec.full_box();
  auto note = [notes](const std::string& s) {
    if (notes) notes->push_back(s);
  };

  if (spec.constraint.lipschitz_g.find(p) == spec.constraint.lipschitz_g.end()) {
    const auto eval = spec.constraint.eval;
    const double est = estimate_lipschitz(eval, full, p, samples, kEstimateSeed);
    spec.constraint.lipschitz_g[p] = est;
    std::ostringstream os;
    os << "estimated lipschitz constant of g for p=" << p << ": " << est << " (" << samples
       << " samples)";
    note(os.str());
  }
  for (int i = 0; i < spec.num_agents(); ++i) {
    const int agent_id = i + 1;
    if (spec.constraint.lipschitz_blocks.count({agent_id, p})) continue;
    const auto [c0, c1] = spec.constraint.agent_blocks[i];
    const auto jac = spec.constraint.jacobian;
    auto block_fn = [jac, c0, c1](const Vec& x) {
      const Matrix J = jac(x);
      Vec out;
      out.reserve(static_cast<std::size_t>(J.rows) * (c1 - c0));
      for (int r = 0; r < J.rows; ++r)
        for (int c = c0; c < c1; ++c) out.push_back(J(r, c));
      return out;
    };
    const double est = estimate_lipschitz(block_fn, full, p, samples, kEstimateSeed);
    spec.constraint.lipschitz_blocks[{agent_id, p}] = est;
    std::ostringstream os;
    os << "estimated block lipschitz constant for agent " << agent_id << ", p=" << p << ": "
       << est << " (" << samples << " samples)";
    note(os.str());
  }
}

ReferenceSolution load_reference(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("reference: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("reference: parse failure in '" + path + "': " + e.what());
  }
  ReferenceSolution ref;
  try {
    ref.x0 = j.at("x0").get<Vec>();
    ref.mu0 = j.at("mu0").get<Vec>();
    ref.kkt_res = j.at("kkt_residual").get<double>();
    ref.radius = j.at("radius").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("reference: malformed '" + path + "': " + e.what());
  }
  return ref;
}

void write_trace_csv(const std::string& path, const RunTrace& trace, const std::string& hash) {
  std::ofstream out(path);
  if (!out) throw ValidationError("run: cannot write '" + path + "'");
  out << "# config " << hash << "\n";
  out << "k";
  if (trace.has_reference) out << ",primal_err,dual_err";
  if (trace.has_kkt) out << ",kkt";
  out << "\n";
  for (const auto& row : trace.rows) {
    out << row.k;
    if (trace.has_reference) out << "," << fmt17(row.primal_err) << "," << fmt17(row.dual_err);
    if (trace.has_kkt) out << "," << fmt17(row.kkt);
    out << "\n";
  }
}

nlohmann::json seed_summary(const RunTrace& trace, double wall_ms) {
  nlohmann::json s;
  s["seed"] = trace.seed;
  s["iters"] = trace.iters;
  s["final_kkt"] = trace.final_kkt;
  s["wall_ms"] = wall_ms;
  s["stopped_at_fixed_point"] = trace.stopped_at_fixed_point;
  if (trace.has_reference) {
    const TraceRow& first = trace.rows.front();
    const TraceRow& half = nearest_row(trace, trace.iters / 2);
    const TraceRow& last = trace.rows.back();
    s["initial_primal"] = first.primal_err;
    s["initial_dual"] = first.dual_err;
    s["half_k"] = half.k;
    s["half_primal"] = half.primal_err;
    s["half_dual"] = half.dual_err;
    s["final_primal"] = last.primal_err;
    s["final_dual"] = last.dual_err;
  }
  return s;
}

nlohmann::json run_metadata(const RunConfig& cfg, const ProblemSpec& spec, double radius,
                            const SensitivityBundle& sens, const NoiseChannelSet& channels,
                            const std::vector<std::string>& notes, bool has_reference) {
  nlohmann::json meta;
  meta["config"] = nlohmann::json::parse(canonical_dump(cfg));
  meta["config_hash"] = config_hash(cfg);
  meta["radius"] = radius;
  meta["has_reference"] = has_reference;
  meta["notes"] = notes;
  nlohmann::json sj;
  sj["delta_g"] = sens.delta_g;
  for (const auto& [agent, v] : sens.delta_blocks) sj["delta_block_" + std::to_string(agent)] = v;
  meta["sensitivities"] = sj;
  nlohmann::json nj;
  nj["active"] = channels.active;
  nj["g_scale"] = channels.g_channel.scale;
  std::vector<double> scales;
  for (const auto& ch : channels.blocks) scales.push_back(ch.scale);
  nj["block_scales"] = scales;
  meta["noise"] = nj;
  meta["num_agents"] = spec.num_agents();
  meta["m"] = spec.constraint.m;
  return meta;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("output: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

struct SeedOutcome {
  RunTrace trace;
  std::vector<TimestepLog> logs;
  double wall_ms = 0.0;
  int error_code = 0;
  std::string error;
};

// Runs fn(seed) for every seed, in parallel when possible, preserving seed
// order in the results and the first error by seed order.
template <typename Fn>
std::vector<SeedOutcome> run_seeds(const std::vector<std::uint64_t>& seeds, Fn fn) {
  std::vector<SeedOutcome> out(seeds.size());
  const long n = static_cast<long>(seeds.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(seeds[i], out[i]);
    } catch (const ValidationError& e) {
      out[i].error_code = 1;
      out[i].error = e.what();
    } catch (const NumericError& e) {
      out[i].error_code = 2;
      out[i].error = e.what();
    } catch (const std::exception& e) {
      out[i].error_code = 2;
      out[i].error = e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    out[i].wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  for (const auto& o : out) {
    if (o.error_code == 1) throw ValidationError(o.error);
    if (o.error_code == 2) throw NumericError(o.error);
  }
  return out;
}

int emit_run_outputs(const RunConfig& cfg, const ProblemSpec& spec,
                     const std::vector<SeedOutcome>& outcomes, double radius,
                     const SensitivityBundle& sens, const NoiseChannelSet& channels,
                     const std::vector<std::string>& notes, bool has_reference,
                     const std::string& outdir, bool events) {
  const std::string hash = config_hash(cfg);
  nlohmann::json summary;
  summary["config_hash"] = hash;
  summary["iterations"] = cfg.iterations;
  nlohmann::json per_seed = nlohmann::json::array();

  std::vector<double> finals_p, finals_d, halves_p, halves_d;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    std::ostringstream name;
    name << outdir << "/trace_seed" << o.trace.seed << ".csv";
    write_trace_csv(name.str(), o.trace, hash);
    per_seed.push_back(seed_summary(o.trace, o.wall_ms));
    if (has_reference) {
      const TraceRow& half = nearest_row(o.trace, o.trace.iters / 2);
      finals_p.push_back(o.trace.rows.back().primal_err);
      finals_d.push_back(o.trace.rows.back().dual_err);
      halves_p.push_back(half.primal_err);
      halves_d.push_back(half.dual_err);
    }
    if (events && !o.logs.empty()) {
      std::ostringstream ev;
      ev << outdir << "/events_seed" << o.trace.seed << ".log";
      std::ofstream evout(ev.str());
      if (!evout) throw ValidationError("output: cannot write '" + ev.str() + "'");
      write_event_log(evout, o.logs);
    }
  }
  summary["seeds"] = per_seed;
  if (has_reference) {
    summary["median_final_primal"] = median(finals_p);
    summary["median_final_dual"] = median(finals_d);
    summary["median_half_primal"] = median(halves_p);
    summary["median_half_dual"] = median(halves_d);
  }
  write_json(outdir + "/summary.json", summary);
  write_json(outdir + "/metadata.json",
             run_metadata(cfg, spec, radius, sens, channels, notes, has_reference));

  for (const auto& o : outcomes) {
    std::cout << "seed " << o.trace.seed << ": iters=" << o.trace.iters;
    if (has_reference)
      std::cout << " final_primal=" << o.trace.rows.back().primal_err
                << " final_dual=" << o.trace.rows.back().dual_err;
    std::cout << " kkt=" << o.trace.final_kkt << " (" << o.wall_ms << " ms)\n";
  }
  if (has_reference)
    std::cout << "medians: final_primal=" << summary["median_final_primal"].get<double>()
              << " final_dual=" << summary["median_final_dual"].get<double>()
              << " half_primal=" << summary["median_half_primal"].get<double>() << "\n";
  std::cout << "config " << hash << " -> " << outdir << "\n";
  return 0;
}

}  // namespace

std::string resolve_output_dir(const RunConfig& cfg) {
  fs::path dir = cfg.output_dir;
  if (const char* root = std::getenv("DPVI_OUTPUT_ROOT"); root && *root && dir.is_relative())
    dir = fs::path(root) / dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("output: cannot create directory '" + dir.string() + "'");
  return dir.string();
}

int cmd_reference(const RunConfig& cfg) {
  std::vector<std::string> notes;
  const ProblemSpec spec = build_problem(cfg.problem, &notes);
  ReferenceOptions opts;
  opts.schedule = cfg.schedule;
  const ReferenceSolution ref = compute_reference_solution(spec, opts);

  const std::string outdir = resolve_output_dir(cfg);
  const std::string path =
      cfg.reference_file.empty() ? outdir + "/reference.json" : cfg.reference_file;
  nlohmann::json j;
  j["config_hash"] = config_hash(cfg);
  j["kkt_residual"] = ref.kkt_res;
  j["radius"] = ref.radius;
  j["x0"] = ref.x0;
  j["mu0"] = ref.mu0;
  write_json(path, j);

  std::cout << "reference: kkt_residual=" << ref.kkt_res << " radius=" << ref.radius
            << " |x0|=" << norm2(ref.x0) << " |mu0|=" << norm2(ref.mu0) << " -> " << path
            << "\n";
  if (!(ref.kkt_res <= cfg.reference_tol)) {
    std::cerr << "reference: residual " << ref.kkt_res << " exceeds tolerance "
              << cfg.reference_tol << "\n";
    return 2;
  }
  return 0;
}

namespace {

int run_or_simulate(const RunConfig& cfg, bool as_simulation, bool events) {
  if (cfg.iterations < 1) throw ValidationError("run: need at least one iteration");
  if (cfg.seeds.empty()) throw ValidationError("run: need at least one seed");
  cfg.policy.validate();

  std::vector<std::string> notes;
  ProblemSpec spec = build_problem(cfg.problem, &notes);
  ensure_lipschitz_constants(spec, cfg.policy, cfg.lipschitz_samples, &notes);

  ReferenceSolution ref;
  bool has_reference = false;
  if (!cfg.reference_file.empty()) {
    ref = load_reference(cfg.reference_file);
    has_reference = true;
  } else {
    std::cerr << "warning: no reference file configured; error columns omitted\n";
  }

  SolverConfig scfg;
  scfg.schedule = cfg.schedule;
  scfg.max_iters = cfg.iterations;
  scfg.fixed_point_tol = cfg.fixed_point_tol;
  scfg.record_every = cfg.record_every;
  scfg.dense_until = cfg.dense_until;
  scfg.kkt_every = cfg.kkt_every;
  scfg.noisy_mu = cfg.noisy_mu;

  const DualSet dual_set = compute_dual_radius(spec);
  const SensitivityBundle sens = compute_sensitivities(spec.constraint, cfg.policy);
  const NoiseChannelSet channels = calibrate(cfg.policy, sens, spec);

  const ReferenceSolution* refp = has_reference ? &ref : nullptr;
  auto outcomes = run_seeds(cfg.seeds, [&](std::uint64_t seed, SeedOutcome& out) {
    if (as_simulation) {
      SimResult r = simulate(spec, scfg, cfg.policy, seed, cfg.iterations, refp, events);
      out.trace = std::move(r.trace);
      out.logs = std::move(r.logs);
    } else {
      out.trace = solve(spec, scfg, cfg.policy, seed, refp);
    }
  });

  const std::string outdir = resolve_output_dir(cfg);
  return emit_run_outputs(cfg, spec, outcomes, dual_set.radius, sens, channels, notes,
                          has_reference, outdir, events);
}

}  // namespace

int cmd_run(const RunConfig& cfg) { return run_or_simulate(cfg, false, false); }

int cmd_simulate(const RunConfig& cfg, bool event_log) {
  return run_or_simulate(cfg, true, event_log);
}

namespace {

// Reads primal/dual error columns at the requested rows of one trace file.
std::map<std::int64_t, double> read_trace_errors(const fs::path& path,
                                                 const std::vector<std::int64_t>& wanted) {
  std::ifstream in(path);
  if (!in) throw ValidationError("analyze: cannot open '" + path.string() + "'");
  std::string line;
  std::map<std::int64_t, double> out;
  int k_col = -1, p_col = -1, d_col = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (k_col < 0) {
      for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        if (cells[c] == "k") k_col = c;
        if (cells[c] == "primal_err") p_col = c;
        if (cells[c] == "dual_err") d_col = c;
      }
      if (k_col < 0 || p_col < 0 || d_col < 0)
        throw ValidationError("analyze: '" + path.string() +
                              "' lacks k/primal_err/dual_err columns");
      continue;
    }
    const std::int64_t k = std::stoll(cells[k_col]);
    if (std::find(wanted.begin(), wanted.end(), k) == wanted.end()) continue;
    const double p = std::stod(cells[p_col]);
    const double d = std::stod(cells[d_col]);
    out[k] = p * p + d * d;
  }
  return out;
}

void check_schedule_match(const RunConfig& cfg, const fs::path& run_dir) {
  const fs::path meta_path = run_dir / "metadata.json";
  std::ifstream in(meta_path);
  if (!in) throw ValidationError("analyze: cannot open '" + meta_path.string() + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("analyze: bad metadata: " + std::string(e.what()));
  }
  const auto& s = meta.at("config").at("schedule");
  const bool same = s.at("alpha_bar").get<double>() == cfg.schedule.alpha_bar &&
                    s.at("gamma_bar").get<double>() == cfg.schedule.gamma_bar &&
                    s.at("c1").get<double>() == cfg.schedule.c1 &&
                    s.at("c2").get<double>() == cfg.schedule.c2;
  if (!same)
    throw ValidationError("analyze: schedule in '" + meta_path.string() +
                          "' differs from the analysis configuration");
}

}  // namespace

int cmd_analyze(const RunConfig& cfg) {
  if (cfg.analysis_kmax < 2) throw ValidationError("analyze: kmax must be >= 2");
  for (std::int64_t k : cfg.checkpoints)
    if (k < 1 || k > cfg.analysis_kmax)
      throw ValidationError("analyze: checkpoints must lie in [1, kmax]");

  std::vector<std::string> notes;
  ProblemSpec spec = build_problem(cfg.problem, &notes);
  ensure_lipschitz_constants(spec, cfg.policy, cfg.lipschitz_samples, &notes);
  const DualSet dual_set = compute_dual_radius(spec);
  const SensitivityBundle sens = compute_sensitivities(spec.constraint, cfg.policy);
  const NoiseChannelSet channels = calibrate(cfg.policy, sens, spec);
  const SaddleMap map{&spec, dual_set};

  const double L_G = estimate_map_lipschitz(map, cfg.lipschitz_samples, kEstimateSeed);
  AnalysisConfig acfg = make_analysis_config(spec, dual_set, channels, L_G);
  const ProofThresholds thresholds =
      proof_thresholds(L_G, cfg.schedule, cfg.analysis_kmax);
  acfg.theta = thresholds.theta;

  const ScheduleReport sched_report =
      validate(cfg.schedule, std::max<std::int64_t>(10, cfg.analysis_kmax));
  const SequenceTerms terms = sequence_terms(acfg, cfg.schedule, cfg.analysis_kmax);

  const std::string hash = config_hash(cfg);
  const std::string outdir = resolve_output_dir(cfg);

  {
    std::ofstream out(outdir + "/sequence.csv");
    if (!out) throw ValidationError("analyze: cannot write sequence.csv");
    out << "# config " << hash << "\n";
    out << "k,theta,rho,tau,sigma,bound\n";
    double e = acfg.D_z * acfg.D_z;
    for (std::int64_t k = 1; k <= cfg.analysis_kmax; ++k) {
      const std::size_t i = static_cast<std::size_t>(k - 1);
      if (k == 1 || k == cfg.analysis_kmax || k % cfg.analysis_record_every == 0)
        out << k << "," << fmt17(terms.theta_k[i]) << "," << fmt17(terms.rho_k[i]) << ","
            << fmt17(terms.tau_k[i]) << "," << fmt17(terms.sigma_k[i]) << "," << fmt17(e)
            << "\n";
      e = (1.0 - terms.tau_k[i]) * e + terms.sigma_k[i];
    }
  }

  nlohmann::json summary;
  summary["config_hash"] = hash;
  summary["L_G"] = L_G;
  summary["M_xi"] = acfg.M_xi;
  summary["D_z"] = acfg.D_z;
  summary["K_w"] = acfg.K_w;
  summary["radius"] = dual_set.radius;
  summary["theta"] = acfg.theta;
  summary["theta_fallback"] = !thresholds.m_found;
  summary["M"] = thresholds.M;
  summary["M_hat"] = thresholds.M_hat;
  summary["schedule_valid"] = sched_report.valid();
  summary["schedule_summable_sigma"] = sched_report.summable_sigma;
  summary["schedule_flags"] = sched_report.describe();
  summary["sigma_total_bound"] = sigma_total_bound(acfg, cfg.schedule);
  summary["notes"] = notes;

  // Observed errors from a previous run directory, when one is given.
  std::map<std::int64_t, std::vector<double>> observed;
  if (!cfg.run_dir.empty()) {
    check_schedule_match(cfg, cfg.run_dir);
    bool any = false;
    for (const auto& entry : fs::directory_iterator(cfg.run_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("trace_seed", 0) != 0 || entry.path().extension() != ".csv") continue;
      any = true;
      for (const auto& [k, esq] : read_trace_errors(entry.path(), cfg.checkpoints))
        observed[k].push_back(esq);
    }
    if (!any)
      throw ValidationError("analyze: no trace_seed*.csv files in '" + cfg.run_dir + "'");
  }

  nlohmann::json checkpoints = nlohmann::json::array();
  for (std::int64_t k : cfg.checkpoints) {
    nlohmann::json cj;
    cj["k"] = k;
    const double ek = expected_error_bound(acfg, cfg.schedule, k);
    cj["expected_error_bound"] = ek;
    cj["sigma_tail_bound"] = sigma_tail_bound(acfg, cfg.schedule, k);
    cj["convergence_probability"] =
        convergence_probability(acfg, cfg.schedule, cfg.eps_ball, k);
    if (auto it = observed.find(k); it != observed.end()) {
      cj["observed_error_sq_median"] = median(it->second);
      cj["observed_seeds"] = it->second.size();
    }
    checkpoints.push_back(cj);
  }
  summary["checkpoints"] = checkpoints;
  summary["eps_ball"] = cfg.eps_ball;

  if (cfg.policy.mechanism == Mechanism::Laplace && !cfg.tradeoff_epsilons.empty()) {
    nlohmann::json tj = nlohmann::json::array();
    for (const auto& pt :
         tradeoff_curve(spec, cfg.policy, dual_set, cfg.schedule, cfg.tradeoff_epsilons)) {
      tj.push_back({{"epsilon", pt.epsilon}, {"K_w", pt.K_w}, {"penalty", pt.penalty}});
    }
    summary["tradeoff"] = tj;
  } else {
    summary["tradeoff"] = nlohmann::json::array();
    notes.push_back("tradeoff table requires the laplace mechanism");
    summary["notes"] = notes;
  }

  write_json(outdir + "/summary.json", summary);
  std::cout << "analyze: L_G=" << L_G << " K_w=" << acfg.K_w << " theta=" << acfg.theta
            << (thresholds.m_found ? "" : " (fallback)")
            << " sigma_total=" << summary["sigma_total_bound"].get<double>() << " -> " << outdir
            << "\n";
  return 0;
}

namespace {

struct CheckRunner {
  int failures = 0;

  void report(const std::string& name, bool ok, const std::string& detail = "") {
    if (ok) {
      std::cout << "PASS " << name << "\n";
    } else {
      ++failures;
      std::cout << "FAIL " << name << (detail.empty() ? "" : ": " + detail) << "\n";
    }
  }
};

}  // namespace

int cmd_check(const RunConfig& cfg) {
  (void)cfg;
  CheckRunner cr;
  const ProblemSpec ref10 = build_reference_problem();
  const ProblemSpec scalar = build_scalar_problem();
  const DualSet dual10 = compute_dual_radius(ref10);
  const BoxSet full10 = ref10.full_box();

  {
    bool ok = true;
    for (int t = 0; t < 10000 && ok; ++t) {
      Vec pt(full10.dim());
      for (int d = 0; d < full10.dim(); ++d)
        pt[d] = 40.0 * (uniform01(7, 0, t, d) - 0.5);
      const Vec pr = project_box(pt, full10);
      ok = full10.contains(pr) && pr == project_box(pr, full10);
    }
    cr.report("box projection clamps and is idempotent", ok);
  }
  {
    bool ok = true;
    for (int t = 0; t < 10000 && ok; ++t) {
      Vec mu(dual10.m);
      for (int j = 0; j < dual10.m; ++j)
        mu[j] = dual10.radius * 2.0 * (uniform01(8, 0, t, j) - 0.25);
      const Vec pr = project_dual(mu, dual10);
      const Vec pr2 = project_dual(pr, dual10);
      ok = dual10.contains(pr, 1e-9) && dist2(pr, pr2) <= 1e-12;
    }
    DualSet small{2, 2.0};
    const Vec pr = project_dual({3.0, 1.0}, small);
    ok = ok && std::fabs(pr[0] - 2.0) <= 1e-12 && std::fabs(pr[1]) <= 1e-12;
    cr.report("dual projection lands in the capped orthant", ok);
  }
  {
    bool ok = true;
    for (double d : {0.5, 0.25, 0.01, 0.001}) {
      const double y = q_inverse(d);
      ok = ok && std::fabs(q_function(y) - d) <= 1e-12;
    }
    cr.report("gaussian tail inverse meets 1e-12", ok);
  }
  {
    PrivacyPolicy pol;
    pol.mechanism = Mechanism::Laplace;
    pol.epsilon = std::log(2.0);
    const auto sens = compute_sensitivities(ref10.constraint, pol);
    const auto ch = calibrate(pol, sens, ref10);
    const bool ok = std::fabs(ch.blocks[0].scale - 5.7707801635578108) <= 1e-6 &&
                    std::fabs(ch.g_channel.scale - 57.448116528246798) <= 1e-6;
    cr.report("laplace calibration matches the published scales", ok);
  }
  {
    PrivacyPolicy pol;
    pol.mechanism = Mechanism::Gaussian;
    pol.epsilon = std::log(2.0);
    pol.delta = 0.01;
    pol.p = 2;
    const double kap = kappa(pol.delta, pol.epsilon);
    const auto sens = compute_sensitivities(ref10.constraint, pol);
    const auto ch = calibrate(pol, sens, ref10);
    const bool ok = std::fabs(kap - 3.5588989381452087) <= 1e-3 &&
                    std::fabs(ch.blocks[0].entry_variance() - 101.32609321457826) <= 1e-2;
    cr.report("gaussian calibration matches the published variances", ok);
  }
  {
    const GradientReport rep = check_gradients(ref10, 10, 11);
    cr.report("analytic gradients agree with central differences", rep.ok());
  }
  {
    const SaddleMap map{&ref10, dual10};
    bool ok = true;
    for (int t = 0; t < 2000 && ok; ++t) {
      EnsembleState a, b;
      a.x.resize(full10.dim());
      b.x.resize(full10.dim());
      for (int d = 0; d < full10.dim(); ++d) {
        a.x[d] = full10.lower[d] + (full10.upper[d] - full10.lower[d]) * uniform01(9, 0, t, d);
        b.x[d] = full10.lower[d] + (full10.upper[d] - full10.lower[d]) * uniform01(9, 1, t, d);
      }
      a.mu.resize(dual10.m);
      b.mu.resize(dual10.m);
      for (int j = 0; j < dual10.m; ++j) {
        a.mu[j] = dual10.radius * uniform01(9, 2, t, j) / dual10.m;
        b.mu[j] = dual10.radius * uniform01(9, 3, t, j) / dual10.m;
      }
      const auto [gax, gamu] = map.eval(a);
      const auto [gbx, gbmu] = map.eval(b);
      double inner = 0.0;
      for (std::size_t d = 0; d < gax.size(); ++d) inner += (gax[d] - gbx[d]) * (a.x[d] - b.x[d]);
      for (std::size_t j = 0; j < gamu.size(); ++j)
        inner += (gamu[j] - gbmu[j]) * (a.mu[j] - b.mu[j]);
      ok = inner >= -1e-9;
    }
    cr.report("saddle map is monotone on sampled pairs", ok);
  }
  {
    PrivacyPolicy none;
    const auto sens = compute_sensitivities(ref10.constraint, none);
    const auto ch = calibrate(none, sens, ref10);
    bool ok = !ch.active;
    const Matrix w = draw(ch.blocks[0], 5, 3);
    for (double v : w.data) ok = ok && v == 0.0 && !std::signbit(v);
    cr.report("inactive channels draw exact zeros", ok);
  }
  {
    const ScheduleReport rep = validate(StepSchedule{}, 100000);
    cr.report("default schedule satisfies the decay conditions", rep.valid() && rep.summable_sigma);
  }
  {
    const DualSet sset = compute_dual_radius(scalar);
    const SaddleMap smap{&scalar, sset};
    EnsembleState z{{0.0}, {0.0}};
    const EnsembleState next = step_deterministic(z, smap, 0.0, 0.1);
    bool ok = std::fabs(sset.radius - 6.25) <= 1e-12;
    ok = ok && std::fabs(next.x[0]) <= 1e-15 && std::fabs(next.mu[0] - 0.1) <= 1e-15;
    const EnsembleState sol{{1.0}, {2.0}};
    ok = ok && kkt_residual(sol, smap) <= 1e-10;
    const DualSet rset = compute_dual_radius(ref10);
    const SaddleMap rmap{&ref10, rset};
    EnsembleState rz;
    rz.x.assign(ref10.total_dim(), 0.0);
    rz.mu.assign(ref10.constraint.m, 0.0);
    ok = ok && kkt_residual(rz, rmap) > 1.0;
    cr.report("scalar benchmark fixed points check out", ok);
  }

  if (cr.failures > 0) {
    std::cout << cr.failures << " check(s) failed\n";
    return 2;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace dpvi
