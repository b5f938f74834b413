#include "dpvi/problem.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "dpvi/rng.hpp"

namespace dpvi {

namespace {

Vec slice(const Vec& x, int first, int last) {
  return Vec(x.begin() + first, x.begin() + last);
}

Vec sample_box_point(const BoxSet& box, std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t t) {
  const int n = box.dim();
  Vec x(n);
  for (int d = 0; d < n; ++d) {
    const double u = uniform01(seed, stream, t, static_cast<std::uint64_t>(d));
    x[d] = box.lower[d] + (box.upper[d] - box.lower[d]) * u;
  }
  return x;
}

double vec_norm_p(const Vec& v, int p) { return p == 1 ? norm1(v) : norm2(v); }

}  // namespace

bool BoxSet::contains(const Vec& x, double tol) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int d = 0; d < dim(); ++d)
    if (x[d] < lower[d] - tol || x[d] > upper[d] + tol) return false;
  return true;
}

void BoxSet::validate() const {
  if (lower.size() != upper.size()) throw ValidationError("box: lower/upper size mismatch");
  if (lower.empty()) throw ValidationError("box: empty");
  for (std::size_t d = 0; d < lower.size(); ++d)
    if (!(lower[d] <= upper[d])) throw ValidationError("box: lower > upper");
}

int ProblemSpec::total_dim() const {
  int n = 0;
  for (const auto& b : boxes) n += b.dim();
  return n;
}

BoxSet ProblemSpec::full_box() const {
  BoxSet full;
  for (const auto& b : boxes) {
    full.lower.insert(full.lower.end(), b.lower.begin(), b.lower.end());
    full.upper.insert(full.upper.end(), b.upper.begin(), b.upper.end());
  }
  return full;
}

double ProblemSpec::objective_value(const Vec& x) const {
  double v = 0.0;
  int off = 0;
  for (const auto& f : objectives) {
    v += f.eval(slice(x, off, off + f.dim));
    off += f.dim;
  }
  return v;
}

Vec ProblemSpec::objective_gradient(const Vec& x) const {
  Vec g;
  g.reserve(x.size());
  int off = 0;
  for (const auto& f : objectives) {
    const Vec gi = f.grad(slice(x, off, off + f.dim));
    g.insert(g.end(), gi.begin(), gi.end());
    off += f.dim;
  }
  return g;
}

double ProblemSpec::slater_margin() const {
  const Vec g = constraint.eval(slater_point);
  double margin = std::numeric_limits<double>::infinity();
  for (double gj : g) margin = std::min(margin, -gj);
  return margin;
}

void ProblemSpec::validate() const {
  if (objectives.empty()) throw ValidationError("problem: no agents");
  if (boxes.size() != objectives.size())
    throw ValidationError("problem: one box per agent required");
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    if (objectives[i].agent_id != static_cast<int>(i) + 1)
      throw ValidationError("problem: objectives must be in agent order 1..N");
    boxes[i].validate();
    if (objectives[i].dim != boxes[i].dim())
      throw ValidationError("problem: objective/box dimension mismatch");
    if (!objectives[i].eval || !objectives[i].grad)
      throw ValidationError("problem: objective missing eval or grad");
  }
  if (constraint.m < 1) throw ValidationError("problem: constraint must have m >= 1 rows");
  if (!constraint.eval || !constraint.jacobian)
    throw ValidationError("problem: constraint missing eval or jacobian");
  if (constraint.agent_blocks.size() != objectives.size())
    throw ValidationError("problem: constraint blocks must cover every agent");
  int off = 0;
  for (std::size_t i = 0; i < constraint.agent_blocks.size(); ++i) {
    const auto [first, last] = constraint.agent_blocks[i];
    if (first != off || last - first != boxes[i].dim())
      throw ValidationError("problem: constraint blocks must partition the columns");
    off = last;
  }
  if (off != total_dim()) throw ValidationError("problem: constraint blocks incomplete");
  if (static_cast<int>(slater_point.size()) != total_dim())
    throw ValidationError("problem: slater point dimension mismatch");
  if (!full_box().contains(slater_point, 1e-12))
    throw ValidationError("problem: slater point outside the box");
  if (!(slater_margin() > 0.0))
    throw ValidationError("problem: slater point must satisfy g < 0 strictly");
}

ObjectiveTerm make_linear_objective(int agent_id, Vec coeff, double offset) {
  ObjectiveTerm f;
  f.agent_id = agent_id;
  f.dim = static_cast<int>(coeff.size());
  f.eval = [coeff, offset](const Vec& x) { return dot(coeff, x) + offset; };
  f.grad = [coeff](const Vec&) { return coeff; };
  f.lipschitz_grad = 0.0;
  return f;
}

ObjectiveTerm make_quadratic_distance_objective(int agent_id, Vec target, double weight) {
  ObjectiveTerm f;
  f.agent_id = agent_id;
  f.dim = static_cast<int>(target.size());
  f.eval = [target, weight](const Vec& x) { return weight * dist2sq(x, target); };
  f.grad = [target, weight](const Vec& x) {
    Vec g(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) g[d] = 2.0 * weight * (x[d] - target[d]);
    return g;
  };
  f.lipschitz_grad = 2.0 * weight;
  return f;
}

ObjectiveTerm make_fourth_power_distance_objective(int agent_id, Vec target, double weight) {
  ObjectiveTerm f;
  f.agent_id = agent_id;
  f.dim = static_cast<int>(target.size());
  f.eval = [target, weight](const Vec& x) {
    const double s = dist2sq(x, target);
    return weight * s * s;
  };
  f.grad = [target, weight](const Vec& x) {
    const double s = dist2sq(x, target);
    Vec g(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) g[d] = 4.0 * weight * s * (x[d] - target[d]);
    return g;
  };
  return f;
}

ObjectiveTerm sum_objectives(int agent_id, std::vector<ObjectiveTerm> parts) {
  if (parts.empty()) throw ValidationError("sum_objectives: no parts");
  for (const auto& p : parts) {
    if (p.agent_id != agent_id) throw ValidationError("sum_objectives: agent id mismatch");
    if (p.dim != parts.front().dim) throw ValidationError("sum_objectives: dim mismatch");
  }
  ObjectiveTerm f;
  f.agent_id = agent_id;
  f.dim = parts.front().dim;
  auto shared = std::make_shared<std::vector<ObjectiveTerm>>(std::move(parts));
  f.eval = [shared](const Vec& x) {
    double v = 0.0;
    for (const auto& p : *shared) v += p.eval(x);
    return v;
  };
  f.grad = [shared](const Vec& x) {
    Vec g(x.size(), 0.0);
    for (const auto& p : *shared) {
      const Vec gi = p.grad(x);
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += gi[d];
    }
    return g;
  };
  double lip = 0.0;
  bool have_lip = true;
  for (const auto& p : *shared) {
    if (!p.lipschitz_grad) {
      have_lip = false;
      break;
    }
    lip += *p.lipschitz_grad;
  }
  if (have_lip) f.lipschitz_grad = lip;
  return f;
}

ConstraintFunction make_sum_of_squares_constraints(const std::vector<ConstraintRow>& rows,
                                                   const std::vector<int>& agent_dims) {
  if (rows.empty()) throw ValidationError("constraints: no rows");
  if (agent_dims.empty()) throw ValidationError("constraints: no agents");

  std::vector<int> offs(agent_dims.size() + 1, 0);
  for (std::size_t i = 0; i < agent_dims.size(); ++i) offs[i + 1] = offs[i] + agent_dims[i];
  const int n = offs.back();
  const int m = static_cast<int>(rows.size());

  auto coord = [offs, agent_dims](int agent_id, int c) {
    if (agent_id < 1 || agent_id > static_cast<int>(agent_dims.size()))
      throw ValidationError("constraints: agent id out of range");
    if (c < 0 || c >= agent_dims[agent_id - 1])
      throw ValidationError("constraints: coordinate out of range");
    return offs[agent_id - 1] + c;
  };
  for (const auto& row : rows) {
    for (const auto& q : row.quad) {
      if (q.center.size() != q.coords.size())
        throw ValidationError("constraints: quad center/coords size mismatch");
      for (int c : q.coords) coord(q.agent_id, c);
    }
    for (const auto& l : row.lin) {
      if (l.coeff.size() != l.coords.size())
        throw ValidationError("constraints: lin coeff/coords size mismatch");
      for (int c : l.coords) coord(l.agent_id, c);
    }
  }

  ConstraintFunction g;
  g.m = m;
  for (std::size_t i = 0; i < agent_dims.size(); ++i) g.agent_blocks.emplace_back(offs[i], offs[i + 1]);
  g.eval = [rows, coord, m](const Vec& x) {
    Vec v(m, 0.0);
    for (int j = 0; j < m; ++j) {
      double s = rows[j].offset;
      for (const auto& q : rows[j].quad)
        for (std::size_t t = 0; t < q.coords.size(); ++t) {
          const double d = x[coord(q.agent_id, q.coords[t])] - q.center[t];
          s += q.weight * d * d;
        }
      for (const auto& l : rows[j].lin)
        for (std::size_t t = 0; t < l.coords.size(); ++t)
          s += l.coeff[t] * x[coord(l.agent_id, l.coords[t])];
      v[j] = s;
    }
    return v;
  };
  g.jacobian = [rows, coord, m, n](const Vec& x) {
    Matrix J(m, n);
    for (int j = 0; j < m; ++j) {
      for (const auto& q : rows[j].quad)
        for (std::size_t t = 0; t < q.coords.size(); ++t) {
          const int c = coord(q.agent_id, q.coords[t]);
          J(j, c) += 2.0 * q.weight * (x[c] - q.center[t]);
        }
      for (const auto& l : rows[j].lin)
        for (std::size_t t = 0; t < l.coords.size(); ++t)
          J(j, coord(l.agent_id, l.coords[t])) += l.coeff[t];
    }
    return J;
  };
  return g;
}

ProblemSpec build_reference_problem() {
  ProblemSpec spec;
  spec.objectives.push_back(make_linear_objective(1, {1.0, 1.0}, 0.0));
  spec.objectives.push_back(make_quadratic_distance_objective(2, {0.0, 0.0}));
  spec.objectives.push_back(make_quadratic_distance_objective(3, {-7.0, 7.0}));
  spec.objectives.push_back(make_linear_objective(4, {1.0, 1.0}, -16.0));
  spec.objectives.push_back(make_fourth_power_distance_objective(5, {-3.0, -3.0}));
  spec.objectives.push_back(make_linear_objective(6, {1.0, 1.0}, -20.0));
  spec.objectives.push_back(make_linear_objective(7, {1.0, 1.0}, 20.0));
  spec.objectives.push_back(make_quadratic_distance_objective(8, {-7.0, 0.0}));
  spec.objectives.push_back(make_linear_objective(9, {1.0, 1.0}, -6.0));
  spec.objectives.push_back(make_fourth_power_distance_objective(10, {0.0, 8.0}));

  for (int i = 0; i < 10; ++i) spec.boxes.push_back(BoxSet{{-10.0, -10.0}, {10.0, 10.0}});

  auto ball = [](int agent_id) {
    return QuadTerm{agent_id, {0, 1}, {0.0, 0.0}, 1.0};
  };
  std::vector<ConstraintRow> rows(6);
  rows[0].quad = {ball(1), ball(2), ball(3)};
  rows[0].offset = -10.0;
  rows[1].quad = {ball(4), ball(5), ball(6)};
  rows[1].offset = -50.0;
  rows[2].quad = {ball(7), ball(8), ball(9)};
  rows[2].offset = -50.0;
  rows[3].quad = {QuadTerm{1, {0}, {0.0}, 1.0}, QuadTerm{10, {0}, {0.0}, 1.0}};
  rows[3].lin = {LinTerm{5, {0}, {1.0}}};
  rows[3].offset = -50.0;
  rows[4].quad = {QuadTerm{4, {1}, {0.0}, 1.0}};
  rows[4].lin = {LinTerm{7, {0}, {1.0}}, LinTerm{9, {1}, {1.0}}};
  rows[4].offset = -20.0;
  rows[5].quad = {ball(8), ball(6)};
  rows[5].offset = -30.0;

  spec.constraint = make_sum_of_squares_constraints(rows, std::vector<int>(10, 2));
  spec.constraint.lipschitz_g = {{1, 39.82}, {2, 56.71}};
  // Coordinates of agents 1, 4, 6 and 8 enter two constraint rows
  // quadratically, which doubles their block sensitivity.
  const double k1_double = 4.0, k2_double = 2.0 * std::sqrt(2.0);
  for (int i = 1; i <= 10; ++i) {
    const bool doubled = (i == 1 || i == 4 || i == 6 || i == 8);
    spec.constraint.lipschitz_blocks[{i, 1}] = doubled ? k1_double : 2.0;
    spec.constraint.lipschitz_blocks[{i, 2}] = doubled ? k2_double : 2.0;
  }

  spec.slater_point.assign(20, 0.0);
  spec.validate();
  return spec;
}

namespace {

double lipschitz_ratio(const std::function<Vec(const Vec&)>& fn, const BoxSet& domain, int p,
                       std::uint64_t seed, std::uint64_t t) {
  const Vec a = sample_box_point(domain, seed, 0, t);
  const Vec b = sample_box_point(domain, seed, 1, t);
  Vec diff(a.size());
  for (std::size_t d = 0; d < a.size(); ++d) diff[d] = a[d] - b[d];
  const double den = vec_norm_p(diff, p);
  if (den == 0.0) return 0.0;
  const Vec fa = fn(a);
  const Vec fb = fn(b);
  Vec fd(fa.size());
  for (std::size_t d = 0; d < fa.size(); ++d) fd[d] = fa[d] - fb[d];
  return vec_norm_p(fd, p) / den;
}

void check_lipschitz_args(const BoxSet& domain, int p, long samples) {
  domain.validate();
  if (p != 1 && p != 2) throw ValidationError("estimate_lipschitz: p must be 1 or 2");
  if (samples < 2) throw ValidationError("estimate_lipschitz: need at least 2 samples");
}

}  // namespace

double estimate_lipschitz(const std::function<Vec(const Vec&)>& fn, const BoxSet& domain,
                          int p, long samples, std::uint64_t seed) {
  check_lipschitz_args(domain, p, samples);
  double best = 0.0;
#ifdef _OPENMP
#pragma omp parallel for reduction(max : best) schedule(static)
#endif
  for (long t = 0; t < samples; ++t)
    best = std::max(best, lipschitz_ratio(fn, domain, p, seed, static_cast<std::uint64_t>(t)));
  return best;
}

double estimate_lipschitz_serial(const std::function<Vec(const Vec&)>& fn, const BoxSet& domain,
                                 int p, long samples, std::uint64_t seed) {
  check_lipschitz_args(domain, p, samples);
  double best = 0.0;
  for (long t = 0; t < samples; ++t)
    best = std::max(best, lipschitz_ratio(fn, domain, p, seed, static_cast<std::uint64_t>(t)));
  return best;
}

bool GradientReport::ok() const {
  for (const auto& e : entries)
    if (e.flagged) return false;
  return true;
}

GradientReport check_gradients(const ProblemSpec& spec, int samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("check_gradients: samples must be >= 1");
  constexpr double h = 1e-6;
  const BoxSet full = spec.full_box();
  GradientReport report;

  auto rel_err = [](double num, double ana) {
    return std::fabs(num - ana) / std::max(1.0, std::fabs(ana));
  };

  int off = 0;
  for (const auto& f : spec.objectives) {
    GradientCheckEntry entry;
    entry.name = "f" + std::to_string(f.agent_id);
    BoxSet local{slice(full.lower, off, off + f.dim), slice(full.upper, off, off + f.dim)};
    for (int s = 0; s < samples; ++s) {
      Vec x = sample_box_point(local, seed, static_cast<std::uint64_t>(f.agent_id), s);
      const Vec ana = f.grad(x);
      for (int d = 0; d < f.dim; ++d) {
        const double keep = x[d];
        x[d] = keep + h;
        const double up = f.eval(x);
        x[d] = keep - h;
        const double dn = f.eval(x);
        x[d] = keep;
        entry.max_rel_err = std::max(entry.max_rel_err, rel_err((up - dn) / (2.0 * h), ana[d]));
      }
    }
    entry.flagged = entry.max_rel_err > 1e-5;
    report.entries.push_back(entry);
    off += f.dim;
  }

  GradientCheckEntry jac;
  jac.name = "g";
  const int n = spec.total_dim();
  for (int s = 0; s < samples; ++s) {
    Vec x = sample_box_point(full, seed, 0, s);
    const Matrix J = spec.constraint.jacobian(x);
    for (int d = 0; d < n; ++d) {
      const double keep = x[d];
      x[d] = keep + h;
      const Vec up = spec.constraint.eval(x);
      x[d] = keep - h;
      const Vec dn = spec.constraint.eval(x);
      x[d] = keep;
      for (int j = 0; j < spec.constraint.m; ++j)
        jac.max_rel_err =
            std::max(jac.max_rel_err, rel_err((up[j] - dn[j]) / (2.0 * h), J(j, d)));
    }
  }
  jac.flagged = jac.max_rel_err > 1e-5;
  report.entries.push_back(jac);

  for (const auto& e : report.entries) report.worst = std::max(report.worst, e.max_rel_err);
  return report;
}

}  // namespace dpvi
