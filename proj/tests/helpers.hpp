#pragma once
// Shared fixtures for the unit tests: deterministic sample points drawn from
// the counter RNG, bit-level comparisons, and lazily computed singletons for
// the expensive objects (the benchmark problem and its polished reference).

#include <cstdint>
#include <cstring>

#include "dpvi/config.hpp"
#include "dpvi/geometry.hpp"
#include "dpvi/problem.hpp"
#include "dpvi/rng.hpp"
#include "dpvi/solver.hpp"

namespace testutil {

using namespace dpvi;

inline bool same_bits(double a, double b) {
  std::uint64_t ua = 0, ub = 0;
  std::memcpy(&ua, &a, sizeof(a));
  std::memcpy(&ub, &b, sizeof(b));
  return ua == ub;
}

inline bool same_bits(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_bits(a[i], b[i])) return false;
  return true;
}

inline double uni(std::uint64_t seed, std::uint64_t k, std::uint64_t idx, double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, 900, k, idx);
}

inline Vec random_box_point(const BoxSet& box, std::uint64_t seed, std::uint64_t k) {
  Vec x(box.lower.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = uni(seed, k, i, box.lower[i], box.upper[i]);
  return x;
}

// A point of M sampled by scaling a nonnegative vector to a random l1 norm
// in [0, R].
inline Vec random_dual_point(const DualSet& set, std::uint64_t seed, std::uint64_t k) {
  Vec mu(set.m);
  double s = 0.0;
  for (int j = 0; j < set.m; ++j) {
    mu[j] = uniform01(seed, 901, k, j);
    s += mu[j];
  }
  const double target = uniform01(seed, 902, k, 0) * set.radius;
  for (int j = 0; j < set.m; ++j) mu[j] *= target / s;
  return mu;
}

inline EnsembleState random_state(const ProblemSpec& spec, const DualSet& set,
                                  std::uint64_t seed, std::uint64_t k) {
  return {random_box_point(spec.full_box(), seed, k), random_dual_point(set, seed, k)};
}

inline const ProblemSpec& ref10() {
  static const ProblemSpec spec = build_reference_problem();
  return spec;
}

inline const ProblemSpec& scalar_problem() {
  static const ProblemSpec spec = build_scalar_problem();
  return spec;
}

inline const DualSet& ref10_dual() {
  static const DualSet set = compute_dual_radius(ref10());
  return set;
}

// Polished saddle point of the benchmark instance, computed once per process.
inline const ReferenceSolution& ref10_solution() {
  static const ReferenceSolution sol = compute_reference_solution(ref10());
  return sol;
}

}  // namespace testutil
