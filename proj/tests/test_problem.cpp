#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"

#include "dpvi/problem.hpp"
#include "helpers.hpp"

using namespace dpvi;
using testutil::ref10;

TEST_CASE("benchmark instance validates and has the published shape") {
  const ProblemSpec& spec = ref10();
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.num_agents() == 10);
  CHECK(spec.total_dim() == 20);
  CHECK(spec.constraint.m == 6);
  for (int i = 0; i < 10; ++i) {
    CHECK(spec.boxes[i].dim() == 2);
    CHECK(spec.boxes[i].lower == Vec{-10.0, -10.0});
    CHECK(spec.boxes[i].upper == Vec{10.0, 10.0});
    CHECK(spec.constraint.agent_blocks[i] == std::pair<int, int>(2 * i, 2 * i + 2));
  }
  CHECK(spec.slater_point == Vec(20, 0.0));
}

TEST_CASE("benchmark constraint values at the origin are exact") {
  const Vec g0 = ref10().constraint.eval(Vec(20, 0.0));
  REQUIRE(g0.size() == 6);
  CHECK(g0[0] == -10.0);
  CHECK(g0[1] == -50.0);
  CHECK(g0[2] == -50.0);
  CHECK(g0[3] == -50.0);
  CHECK(g0[4] == -20.0);
  CHECK(g0[5] == -30.0);
  CHECK(ref10().slater_margin() == 10.0);
}

TEST_CASE("benchmark objective at the origin") {
  CHECK(ref10().objective_value(Vec(20, 0.0)) == doctest::Approx(4545.0).epsilon(1e-12));
}

TEST_CASE("benchmark Lipschitz constants are the published ones") {
  const ConstraintFunction& g = ref10().constraint;
  CHECK(g.lipschitz_g.at(1) == 39.82);
  CHECK(g.lipschitz_g.at(2) == 56.71);
  for (int i = 1; i <= 10; ++i) {
    const bool quad_coupled = (i == 1 || i == 4 || i == 6 || i == 8);
    CHECK(g.lipschitz_blocks.at({i, 1}) == (quad_coupled ? 4.0 : 2.0));
    CHECK(g.lipschitz_blocks.at({i, 2}) ==
          doctest::Approx(quad_coupled ? std::sqrt(8.0) : 2.0).epsilon(1e-12));
  }
}

TEST_CASE("sampled block Lipschitz never exceeds the attached constant") {
  const ProblemSpec& spec = ref10();
  const BoxSet box = spec.full_box();
  for (int i = 1; i <= 10; ++i) {
    const auto [c0, c1] = spec.constraint.agent_blocks[i - 1];
    auto block = [&](const Vec& x) {
      const Matrix J = spec.constraint.jacobian(x);
      Vec v;
      v.reserve(static_cast<std::size_t>(J.rows) * (c1 - c0));
      for (int r = 0; r < J.rows; ++r)
        for (int c = c0; c < c1; ++c) v.push_back(J(r, c));
      return v;
    };
    for (int p : {1, 2}) {
      const double est = estimate_lipschitz(block, box, p, 20000, 1234 + i);
      CHECK(est <= spec.constraint.lipschitz_blocks.at({i, p}) * (1.0 + 1e-9));
      CHECK(est > 0.0);
    }
  }
}

TEST_CASE("sampled constraint Lipschitz stays below the published bound") {
  const ProblemSpec& spec = ref10();
  const double est =
      estimate_lipschitz(spec.constraint.eval, spec.full_box(), 1, 1000000, 99);
  CHECK(est <= 39.82 * (1.0 + 1e-9));
  // Random pairs spread their l1 distance over all 20 coordinates, so the
  // sampled ratio sits well below the single-coordinate worst case.
  CHECK(est > 8.0);
}

TEST_CASE("Lipschitz estimate of the identity approaches 1") {
  BoxSet box{{-1.0, -1.0}, {1.0, 1.0}};
  auto id = [](const Vec& x) { return x; };
  const double est = estimate_lipschitz(id, box, 2, 20000, 7);
  CHECK(est > 0.9);
  CHECK(est <= 1.0 + 1e-12);
}

TEST_CASE("Lipschitz estimate of x -> 2x is close to 2") {
  BoxSet box{{0.0}, {1.0}};
  auto twice = [](const Vec& x) { return Vec{2.0 * x[0]}; };
  const double est = estimate_lipschitz(twice, box, 1, 20000, 7);
  CHECK(est > 1.99);
  CHECK(est <= 2.0 + 1e-9);
}

TEST_CASE("Lipschitz estimate of a degenerate box is zero") {
  BoxSet box{{3.0, -1.0}, {3.0, -1.0}};
  auto id = [](const Vec& x) { return x; };
  CHECK(estimate_lipschitz(id, box, 2, 1000, 5) == 0.0);
}

TEST_CASE("Lipschitz estimate rejects fewer than two samples") {
  BoxSet box{{0.0}, {1.0}};
  auto id = [](const Vec& x) { return x; };
  CHECK_THROWS_AS((void)estimate_lipschitz(id, box, 1, 1, 5), ValidationError);
  CHECK_THROWS_AS((void)estimate_lipschitz(id, box, 1, 0, 5), ValidationError);
  CHECK_THROWS_AS((void)estimate_lipschitz(id, box, 3, 100, 5), ValidationError);
}

TEST_CASE("parallel and serial Lipschitz estimates agree bitwise") {
  const ProblemSpec& spec = ref10();
  const BoxSet box = spec.full_box();
  for (std::uint64_t seed : {1ull, 42ull}) {
    const double a = estimate_lipschitz(spec.constraint.eval, box, 1, 30000, seed);
    const double b = estimate_lipschitz_serial(spec.constraint.eval, box, 1, 30000, seed);
    CHECK(testutil::same_bits(a, b));
  }
}

TEST_CASE("gradient check passes on the benchmark instance") {
  const GradientReport rep = check_gradients(ref10(), 100, 17);
  CHECK(rep.ok());
  CHECK(rep.worst < 1e-5);
  CHECK(rep.entries.size() == 11);  // 10 objectives + the constraint Jacobian
  for (const auto& e : rep.entries) CHECK_FALSE(e.flagged);
}

TEST_CASE("gradient check flags a wrong gradient") {
  ProblemSpec spec;
  ObjectiveTerm bad = make_quadratic_distance_objective(1, {0.0, 0.0});
  bad.grad = [](const Vec&) { return Vec{0.0, 0.0}; };  // wrong for a nonconstant f
  spec.objectives = {bad};
  spec.boxes = {BoxSet{{-1.0, -1.0}, {1.0, 1.0}}};
  spec.constraint = make_sum_of_squares_constraints(
      {ConstraintRow{{}, {LinTerm{1, {0}, {1.0}}}, -5.0}}, {2});
  spec.slater_point = {0.0, 0.0};
  const GradientReport rep = check_gradients(spec, 50, 3);
  CHECK_FALSE(rep.ok());
  CHECK(rep.entries[0].flagged);
}

TEST_CASE("gradient check accepts a constant objective with zero gradient") {
  ProblemSpec spec;
  ObjectiveTerm flat;
  flat.agent_id = 1;
  flat.dim = 2;
  flat.eval = [](const Vec&) { return 3.5; };
  flat.grad = [](const Vec&) { return Vec{0.0, 0.0}; };
  spec.objectives = {flat};
  spec.boxes = {BoxSet{{-1.0, -1.0}, {1.0, 1.0}}};
  spec.constraint = make_sum_of_squares_constraints(
      {ConstraintRow{{}, {LinTerm{1, {0}, {1.0}}}, -5.0}}, {2});
  spec.slater_point = {0.0, 0.0};
  const GradientReport rep = check_gradients(spec, 50, 3);
  CHECK(rep.ok());
}

TEST_CASE("objectives and constraint rows are convex along sampled segments") {
  const ProblemSpec& spec = ref10();
  const BoxSet box = spec.full_box();
  for (int t = 0; t < 500; ++t) {
    const Vec a = testutil::random_box_point(box, 31, 2 * t);
    const Vec b = testutil::random_box_point(box, 31, 2 * t + 1);
    const double lam = uniform01(31, 903, t, 0);
    Vec mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mid[i] = lam * a[i] + (1.0 - lam) * b[i];
    CHECK(spec.objective_value(mid) <=
          lam * spec.objective_value(a) + (1.0 - lam) * spec.objective_value(b) + 1e-9);
    const Vec ga = spec.constraint.eval(a);
    const Vec gb = spec.constraint.eval(b);
    const Vec gm = spec.constraint.eval(mid);
    for (int j = 0; j < spec.constraint.m; ++j)
      CHECK(gm[j] <= lam * ga[j] + (1.0 - lam) * gb[j] + 1e-9);
  }
}

TEST_CASE("sum_objectives adds values and gradients") {
  ObjectiveTerm lin = make_linear_objective(2, {1.0, -3.0}, 0.5);
  ObjectiveTerm quad = make_quadratic_distance_objective(2, {1.0, 1.0}, 2.0);
  ObjectiveTerm s = sum_objectives(2, {lin, quad});
  const Vec x{0.25, -0.75};
  CHECK(s.eval(x) == doctest::Approx(lin.eval(x) + quad.eval(x)).epsilon(1e-15));
  const Vec gl = lin.grad(x), gq = quad.grad(x), gs = s.grad(x);
  for (int i = 0; i < 2; ++i) CHECK(gs[i] == doctest::Approx(gl[i] + gq[i]).epsilon(1e-15));
  CHECK(s.agent_id == 2);
  CHECK(s.dim == 2);
}

TEST_CASE("objective factories evaluate as documented") {
  ObjectiveTerm lin = make_linear_objective(1, {2.0, -1.0}, 3.0);
  CHECK(lin.eval({1.0, 4.0}) == 2.0 - 4.0 + 3.0);
  CHECK(lin.grad({5.0, 5.0}) == Vec{2.0, -1.0});

  ObjectiveTerm quad = make_quadratic_distance_objective(1, {1.0, -1.0});
  CHECK(quad.eval({3.0, 0.0}) == doctest::Approx(4.0 + 1.0).epsilon(1e-15));
  CHECK(quad.grad({3.0, 0.0}) == Vec{4.0, 2.0});

  ObjectiveTerm quart = make_fourth_power_distance_objective(1, {0.0, 0.0});
  CHECK(quart.eval({1.0, 1.0}) == doctest::Approx(4.0).epsilon(1e-15));
  // grad = 4 |x - t|^2 (x - t)
  CHECK(quart.grad({1.0, 1.0}) == Vec{8.0, 8.0});
}

TEST_CASE("constraint builder assembles rows, Jacobian and blocks") {
  // g_1 = |x_1 - (1,1)|^2 + x_2[0] - 9, g_2 = -x_1[1] + 2 x_2[1] + 1
  std::vector<ConstraintRow> rows(2);
  rows[0].quad = {QuadTerm{1, {0, 1}, {1.0, 1.0}, 1.0}};
  rows[0].lin = {LinTerm{2, {0}, {1.0}}};
  rows[0].offset = -9.0;
  rows[1].lin = {LinTerm{1, {1}, {-1.0}}, LinTerm{2, {1}, {2.0}}};
  rows[1].offset = 1.0;
  ConstraintFunction g = make_sum_of_squares_constraints(rows, {2, 2});

  CHECK(g.m == 2);
  CHECK(g.agent_blocks == std::vector<std::pair<int, int>>{{0, 2}, {2, 4}});
  const Vec x{2.0, 0.0, 3.0, -1.0};
  const Vec v = g.eval(x);
  CHECK(v[0] == doctest::Approx(1.0 + 1.0 + 3.0 - 9.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(0.0 - 2.0 + 1.0).epsilon(1e-15));
  const Matrix J = g.jacobian(x);
  REQUIRE(J.rows == 2);
  REQUIRE(J.cols == 4);
  CHECK(J(0, 0) == 2.0);   // 2 (x_1[0] - 1)
  CHECK(J(0, 1) == -2.0);  // 2 (x_1[1] - 1)
  CHECK(J(0, 2) == 1.0);
  CHECK(J(0, 3) == 0.0);
  CHECK(J(1, 0) == 0.0);
  CHECK(J(1, 1) == -1.0);
  CHECK(J(1, 2) == 0.0);
  CHECK(J(1, 3) == 2.0);
}

TEST_CASE("validation rejects malformed problems") {
  BoxSet bad{{1.0}, {0.0}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  BoxSet mismatched{{0.0, 0.0}, {1.0}};
  CHECK_THROWS_AS(mismatched.validate(), ValidationError);

  ProblemSpec spec;
  spec.objectives = {make_quadratic_distance_objective(1, {0.0})};
  spec.boxes = {BoxSet{{-1.0}, {1.0}}};
  spec.constraint =
      make_sum_of_squares_constraints({ConstraintRow{{}, {LinTerm{1, {0}, {1.0}}}, 0.0}}, {1});
  spec.slater_point = {0.0};  // g(0) = 0, not strictly feasible
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec.slater_point = {-0.5};
  CHECK_NOTHROW(spec.validate());

  spec.slater_point = {0.0, 0.0};  // wrong dimension
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("box membership respects the tolerance argument") {
  BoxSet box{{0.0, 0.0}, {1.0, 1.0}};
  CHECK(box.contains({0.5, 0.5}));
  CHECK_FALSE(box.contains({1.0 + 1e-9, 0.5}));
  CHECK(box.contains({1.0 + 1e-9, 0.5}, 1e-8));
}
