#pragma once
// Problem definition: per-agent convex objectives on box sets coupled by a
// shared vector constraint g(x) <= 0, plus numeric self-checks (gradient
// verification, sampled Lipschitz estimation) and the built-in 10-agent
// benchmark instance.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpvi/types.hpp"

namespace dpvi {

// One agent's objective f_i with explicit gradient.
struct ObjectiveTerm {
  int agent_id = 0;  // 1-based
  int dim = 0;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  std::optional<double> lipschitz_grad;
};

// Axis-aligned box, the feasible set X_i of one agent (or a stacked product).
struct BoxSet {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& x, double tol = 0.0) const;
  void validate() const;  // lower <= upper componentwise, equal sizes
};

// Shared constraint g: R^n -> R^m with Jacobian and per-agent column blocks.
struct ConstraintFunction {
  int m = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Matrix(const Vec&)> jacobian;
  // [first, last) column range per agent, in agent order, 0-based.
  std::vector<std::pair<int, int>> agent_blocks;
  // p in {1,2} -> Lipschitz constant of g.
  std::map<int, double> lipschitz_g;
  // (agent_id, p) -> Lipschitz constant of the block map x -> g_{x_i}(x).
  std::map<std::pair<int, int>, double> lipschitz_blocks;
};

struct ProblemSpec {
  std::vector<ObjectiveTerm> objectives;
  std::vector<BoxSet> boxes;
  ConstraintFunction constraint;
  Vec slater_point;

  int num_agents() const { return static_cast<int>(objectives.size()); }
  int total_dim() const;
  BoxSet full_box() const;  // concatenation of all agent boxes

  double objective_value(const Vec& x) const;  // f(x) = sum_i f_i(x_i)
  Vec objective_gradient(const Vec& x) const;  // stacked per-agent gradients
  double slater_margin() const;                // min_j -g_j(slater_point)

  // Structural checks: consistent dims, blocks partition columns, strict
  // Slater feasibility. Throws ValidationError.
  void validate() const;
};

// Objective building blocks. Composable: an agent's objective may be a sum.
ObjectiveTerm make_linear_objective(int agent_id, Vec coeff, double offset = 0.0);
ObjectiveTerm make_quadratic_distance_objective(int agent_id, Vec target, double weight = 1.0);
ObjectiveTerm make_fourth_power_distance_objective(int agent_id, Vec target, double weight = 1.0);
ObjectiveTerm sum_objectives(int agent_id, std::vector<ObjectiveTerm> parts);

// Constraint rows of the form
//   g_j(x) = sum_t w_t * |x_i[coords_t] - c_t|^2 + sum_t a_t . x_i[coords_t] + offset.
struct QuadTerm {
  int agent_id = 0;
  std::vector<int> coords;  // coordinate indices within the agent block
  Vec center;
  double weight = 1.0;
};
struct LinTerm {
  int agent_id = 0;
  std::vector<int> coords;
  Vec coeff;
};
struct ConstraintRow {
  std::vector<QuadTerm> quad;
  std::vector<LinTerm> lin;
  double offset = 0.0;
};
ConstraintFunction make_sum_of_squares_constraints(const std::vector<ConstraintRow>& rows,
                                                   const std::vector<int>& agent_dims);

// The built-in 10-agent, 6-constraint benchmark instance (n_i = 2, boxes
// [-10,10]^2, Slater point at the origin) with its published Lipschitz
// constants attached.
ProblemSpec build_reference_problem();

// Sampled lower bound on the Lipschitz constant of fn over the box: the max
// of |fn(a)-fn(b)|_p / |a-b|_p over random pairs. A degenerate box gives 0.
// Deterministic in (samples, seed) and independent of thread count.
double estimate_lipschitz(const std::function<Vec(const Vec&)>& fn, const BoxSet& domain,
                          int p, long samples, std::uint64_t seed);
// Serial twin of the same computation, kept for testing and benchmarking.
double estimate_lipschitz_serial(const std::function<Vec(const Vec&)>& fn, const BoxSet& domain,
                                 int p, long samples, std::uint64_t seed);

// Central-difference verification of every gradient and the constraint
// Jacobian at sampled interior points.
struct GradientCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool flagged = false;  // true when max_rel_err > 1e-5
};
struct GradientReport {
  std::vector<GradientCheckEntry> entries;
  double worst = 0.0;
  bool ok() const;
};
GradientReport check_gradients(const ProblemSpec& spec, int samples, std::uint64_t seed);

}  // namespace dpvi
