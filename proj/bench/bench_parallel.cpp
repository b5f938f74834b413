// Times each parallel kernel against its serial twin and verifies that the
// two produce bitwise-identical results, which is the contract that keeps
// OpenMP safe to enable. Run with an optional scale factor to grow the
// workloads, e.g. `bench_parallel 4`.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "dpvi/analysis.hpp"
#include "dpvi/problem.hpp"
#include "dpvi/solver.hpp"

using namespace dpvi;

namespace {

bool same_bits(double a, double b) {
  std::uint64_t ua = 0, ub = 0;
  std::memcpy(&ua, &a, sizeof(a));
  std::memcpy(&ub, &b, sizeof(b));
  return ua == ub;
}

bool same_bits(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_bits(a[i], b[i])) return false;
  return true;
}

template <typename F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const std::string& name, double par_ms, double ser_ms, bool identical) {
  std::cout << name << ": parallel " << par_ms << " ms, serial " << ser_ms << " ms, identical: "
            << (identical ? "yes" : "no") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  long scale = 1;
  if (argc > 1) scale = std::max(1L, std::atol(argv[1]));

  const ProblemSpec spec = build_reference_problem();
  const BoxSet box = spec.full_box();
  const DualSet dual = compute_dual_radius(spec);
  const SaddleMap map{&spec, dual};

  {
    const long samples = 200000 * scale;
    double par = 0.0, ser = 0.0;
    const auto eval = spec.constraint.eval;
    const double par_ms = time_ms([&] { par = estimate_lipschitz(eval, box, 1, samples, 42); });
    const double ser_ms =
        time_ms([&] { ser = estimate_lipschitz_serial(eval, box, 1, samples, 42); });
    report("estimate_lipschitz", par_ms, ser_ms, same_bits(par, ser));
  }

  {
    const long samples = 20000 * scale;
    double par = 0.0, ser = 0.0;
    const double par_ms = time_ms([&] { par = estimate_map_lipschitz(map, samples, 42); });
    const double ser_ms = time_ms([&] { ser = estimate_map_lipschitz_serial(map, samples, 42); });
    report("estimate_map_lipschitz", par_ms, ser_ms, same_bits(par, ser));
  }

  {
    double par = 0.0, ser = 0.0;
    const double par_ms = time_ms([&] { par = zeta_fn(1.04); });
    const double ser_ms = time_ms([&] { ser = zeta_fn_serial(1.04); });
    report("zeta_fn", par_ms, ser_ms, same_bits(par, ser));
  }

  {
    AnalysisConfig cfg;
    cfg.L_G = 2.0;
    cfg.M_xi = 3.0;
    cfg.D_z = 5.0;
    cfg.K_w = 7.0;
    const StepSchedule sched;
    const std::int64_t kmax = 1000000 * scale;
    SequenceTerms par, ser;
    const double par_ms = time_ms([&] { par = sequence_terms(cfg, sched, kmax); });
    const double ser_ms = time_ms([&] { ser = sequence_terms_serial(cfg, sched, kmax); });
    const bool identical = same_bits(par.theta_k, ser.theta_k) && same_bits(par.rho_k, ser.rho_k) &&
                           same_bits(par.tau_k, ser.tau_k) && same_bits(par.sigma_k, ser.sigma_k);
    report("sequence_terms", par_ms, ser_ms, identical);
  }

  {
    const int horizon = 2000;
    Vec tau(horizon), sigma(horizon);
    for (int i = 0; i < horizon; ++i) {
      tau[i] = 1.0 / (i + 1.0);
      sigma[i] = 1.0 / ((i + 1.0) * (i + 1.0));
    }
    const long trials = 100000 * scale;
    Lemma2Report par, ser;
    const double par_ms = time_ms([&] { par = lemma2_monte_carlo_check(tau, sigma, trials, 7); });
    const double ser_ms =
        time_ms([&] { ser = lemma2_monte_carlo_check_serial(tau, sigma, trials, 7); });
    report("lemma2_monte_carlo_check", par_ms, ser_ms, same_bits(par.mean_final, ser.mean_final));
  }

  return 0;
}
