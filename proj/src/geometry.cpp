#include "dpvi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dpvi {

void DualSet::validate() const {
  if (m < 1) throw ValidationError("dual set: m must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ValidationError("dual set: radius must be positive and finite");
}

bool DualSet::contains(const Vec& mu, double tol) const {
  if (static_cast<int>(mu.size()) != m) return false;
  for (double v : mu)
    if (v < -tol) return false;
  return norm1(mu) <= radius + tol;
}

Vec project_box(const Vec& point, const BoxSet& box) {
  Vec out(point.size());
  for (std::size_t d = 0; d < point.size(); ++d)
    out[d] = std::min(std::max(point[d], box.lower[d]), box.upper[d]);
  return out;
}

Vec project_dual(const Vec& point, const DualSet& set) {
  Vec mu(point.size());
  for (std::size_t j = 0; j < point.size(); ++j) mu[j] = std::max(point[j], 0.0);
  double s = 0.0;
  for (double v : mu) s += v;
  if (s <= set.radius) return mu;

  // l1 cap is active: shift by the threshold that lands the sum on R.
  Vec u = mu;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - set.radius) / static_cast<double>(j + 1);
    if (j + 1 == u.size() || u[j + 1] <= t) {
      if (t >= 0.0 && u[j] > t) {
        theta = t;
        break;
      }
    }
  }
  for (double& v : mu) v = std::max(v - theta, 0.0);
  return mu;
}

EnsembleState project_ensemble(const EnsembleState& state, const ProblemSpec& spec,
                               const DualSet& set) {
  if (static_cast<int>(state.x.size()) != spec.total_dim() ||
      static_cast<int>(state.mu.size()) != set.m)
    throw ValidationError("project: state dimensions do not match the problem");
  EnsembleState out;
  out.x = project_box(state.x, spec.full_box());
  out.mu = project_dual(state.mu, set);
  return out;
}

namespace {

// Projected gradient descent with backtracking on one agent's objective.
Vec minimize_over_box(const ObjectiveTerm& f, const BoxSet& box) {
  const int n = box.dim();
  Vec x(n);
  for (int d = 0; d < n; ++d) x[d] = 0.5 * (box.lower[d] + box.upper[d]);

  double t = 1.0;
  for (long it = 0; it < 100000; ++it) {
    const Vec g = f.grad(x);
    const double fx = f.eval(x);

    Vec xn;
    for (int bt = 0; bt < 60; ++bt) {
      Vec cand(n);
      for (int d = 0; d < n; ++d) cand[d] = x[d] - t * g[d];
      cand = project_box(cand, box);
      double lin = 0.0, sq = 0.0;
      for (int d = 0; d < n; ++d) {
        const double dd = cand[d] - x[d];
        lin += g[d] * dd;
        sq += dd * dd;
      }
      if (f.eval(cand) <= fx + lin + 0.5 * sq / t + 1e-15) {
        xn = std::move(cand);
        break;
      }
      t *= 0.5;
    }
    if (xn.empty()) break;

    // unit-step fixed point residual
    Vec nat(n);
    for (int d = 0; d < n; ++d) nat[d] = xn[d] - g[d];
    nat = project_box(nat, box);
    double res = 0.0;
    for (int d = 0; d < n; ++d) {
      const double dd = xn[d] - nat[d];
      res += dd * dd;
    }
    x = std::move(xn);
    if (std::sqrt(res) <= 1e-8) {
      const Vec g2 = f.grad(x);
      Vec nat2(n);
      for (int d = 0; d < n; ++d) nat2[d] = x[d] - g2[d];
      nat2 = project_box(nat2, box);
      if (dist2(x, nat2) <= 1e-8) break;
    }
    t = std::min(t * 2.0, 1e6);
  }
  return x;
}

}  // namespace

DualSet compute_dual_radius(const ProblemSpec& spec) {
  spec.validate();

  Vec xstar;
  xstar.reserve(spec.total_dim());
  for (std::size_t i = 0; i < spec.objectives.size(); ++i) {
    const Vec xi = minimize_over_box(spec.objectives[i], spec.boxes[i]);
    xstar.insert(xstar.end(), xi.begin(), xi.end());
  }

  const double margin = spec.slater_margin();
  if (!(margin > 0.0)) throw ValidationError("dual radius: slater margin must be positive");
  const double fbar = spec.objective_value(spec.slater_point);
  const double fstar = spec.objective_value(xstar);

  DualSet set;
  set.m = spec.constraint.m;
  set.radius = (fbar - fstar) / margin;
  set.validate();
  return set;
}

double sup_state_norm(const ProblemSpec& spec, const DualSet& set) {
  const BoxSet full = spec.full_box();
  double s = 0.0;
  for (int d = 0; d < full.dim(); ++d)
    s += std::max(full.lower[d] * full.lower[d], full.upper[d] * full.upper[d]);
  // the farthest multiplier is R on a single coordinate
  s += set.radius * set.radius;
  return std::sqrt(s);
}

double state_diameter(const ProblemSpec& spec, const DualSet& set) {
  const BoxSet full = spec.full_box();
  double s = 0.0;
  for (int d = 0; d < full.dim(); ++d) {
    const double w = full.upper[d] - full.lower[d];
    s += w * w;
  }
  // two opposite corners R e_i, R e_j of the capped orthant (m >= 2),
  // else the segment [0, R]
  s += (set.m >= 2) ? 2.0 * set.radius * set.radius : set.radius * set.radius;
  return std::sqrt(s);
}

}  // namespace dpvi
