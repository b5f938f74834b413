#pragma once
// Exact Euclidean projections onto the primal boxes, the dual set
// M = {mu >= 0, |mu|_1 <= R}, and their product Z, plus the Slater-based
// computation of the dual radius R.

#include "dpvi/problem.hpp"
#include "dpvi/types.hpp"

namespace dpvi {

// Bounded multiplier set: nonnegative orthant intersected with an l1 ball.
struct DualSet {
  int m = 0;
  double radius = 0.0;  // R = (f(xbar) - f(xstar)) / min_j(-g_j(xbar))

  void validate() const;  // radius > 0, m >= 1
  bool contains(const Vec& mu, double tol = 1e-12) const;
};

// Stacked iterate z = (x, mu).
struct EnsembleState {
  Vec x;
  Vec mu;
};

// Componentwise clamp onto the box.
Vec project_box(const Vec& point, const BoxSet& box);

// Exact Euclidean projection onto {mu >= 0, |mu|_1 <= R}: clamp negatives,
// then if the l1 norm still exceeds R apply the sort-based threshold
// mu_j <- max(mu_j - theta, 0) with theta chosen so the result sums to R.
Vec project_dual(const Vec& point, const DualSet& set);

// Blockwise projection onto Z = X x M.
EnsembleState project_ensemble(const EnsembleState& state, const ProblemSpec& spec,
                               const DualSet& set);

// Minimizes f over X (separable, per-agent projected gradient with
// backtracking to tolerance 1e-8) and returns the dual set with
// R = (f(xbar) - f(xstar)) / min_j(-g_j(xbar)).
DualSet compute_dual_radius(const ProblemSpec& spec);

// Largest |z|_2 over Z and the diameter of Z, both exact for a product of
// intervals and the l1-capped orthant. Used by the convergence analysis.
double sup_state_norm(const ProblemSpec& spec, const DualSet& set);
double state_diameter(const ProblemSpec& spec, const DualSet& set);

}  // namespace dpvi
