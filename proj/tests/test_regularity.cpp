#include <doctest.h>

#include <cmath>

#include "bdfoa/regularity.hpp"

using namespace bdfoa;

namespace {

Vec vec1(double a) { return Vec::Constant(1, a); }

EvalPoint pt(std::initializer_list<double> x, std::initializer_list<double> y) {
  EvalPoint p;
  p.x = Vec(static_cast<int>(x.size()));
  p.y = Vec(static_cast<int>(y.size()));
  int i = 0;
  for (double v : x) p.x(i++) = v;
  i = 0;
  for (double v : y) p.y(i++) = v;
  return p;
}

BilevelProblem problem_with_f(const std::string& f, BoxSet Y) {
  BilevelProblem prob;
  prob.n = 1;
  prob.m = 1;
  prob.name = "custom";
  prob.F = parse("0", 1, 1);
  prob.f = parse(f, 1, 1);
  prob.Y = std::move(Y);
  return prob;
}

}  // namespace

TEST_CASE("interior nonsingularity (condition ii)") {
  const double y0 = solve_y0();
  const auto mir = check_interior_nonsingular(builtin("mirrlees"), pt({1.0}, {y0}));
  CHECK(mir.verdict == Verdict::Holds);
  CHECK(mir.value == doctest::Approx(1.70).epsilon(5e-3));

  const auto toy = check_interior_nonsingular(builtin("toy-convex"), pt({1.0}, {1.0}));
  CHECK(toy.verdict == Verdict::Holds);
  CHECK(toy.value == doctest::Approx(2.0));

  // zero second derivative
  const auto cubic = check_interior_nonsingular(problem_with_f("y1^3", BoxSet::whole_space(1)),
                                                pt({0.0}, {0.0}));
  CHECK(cubic.verdict == Verdict::Fails);

  CHECK_THROWS_AS(check_interior_nonsingular(builtin("mirrlees"), pt({1.0}, {0.5})),
                  InvalidArgument);
}

TEST_CASE("strong monotonicity (condition iii)") {
  const auto toy = check_strong_monotonicity(builtin("toy-convex"), pt({0.3}, {0.3}));
  CHECK(toy.verdict == Verdict::Holds);
  CHECK(toy.value == doctest::Approx(2.0));

  const double y0 = solve_y0();
  const auto mir = check_strong_monotonicity(builtin("mirrlees"), pt({1.0}, {y0}));
  CHECK(mir.verdict == Verdict::Holds);
  CHECK(mir.value == doctest::Approx(1.70).epsilon(5e-3));
  CHECK(mir.pointwise_only);

  // degenerate box: span(Y-Y) = {0}
  const auto point_box = check_strong_monotonicity(
      problem_with_f("-y1^2", BoxSet::bounds(vec1(0.0), vec1(0.0))), pt({0.0}, {0.0}));
  CHECK(point_box.verdict == Verdict::Holds);
  CHECK(std::isinf(point_box.value));

  // witness re-verifies the quadratic bound on sampled w
  const BilevelProblem mm = builtin("modified-mirrlees");
  const auto r = check_strong_monotonicity(mm, pt({0.5, 0.5}, {y0}));
  const Mat H = differentiate(mm.f, pt({0.5, 0.5}, {y0})).hessian.block(2, 2, 1, 1);
  for (int k = 1; k <= 500; ++k) {
    const Vec w = Vec::Constant(1, -5.0 + 10.0 * k / 500.0);
    CHECK(w.dot(H * w) >= (r.value - 1e-9) * w.squaredNorm());
  }
}

TEST_CASE("second-order sufficiency over the critical cone (condition iv-a)") {
  const auto toy = check_sosc_box(builtin("toy-convex"), pt({1.0}, {1.0}));
  CHECK(toy.verdict == Verdict::Holds);

  const double y0 = solve_y0();
  const auto mir = check_sosc_box(builtin("mirrlees"), pt({1.0}, {y0}));
  CHECK(mir.verdict == Verdict::Holds);
  CHECK(mir.value == doctest::Approx(1.70).epsilon(5e-3));

  const auto neg = check_sosc_box(problem_with_f("-y1^2", BoxSet::bounds(vec1(-1.0), vec1(1.0))),
                                  pt({0.0}, {0.0}));
  CHECK(neg.verdict == Verdict::Fails);
  REQUIRE(neg.worst_direction);
  CHECK(std::abs(std::abs((*neg.worst_direction)(0)) - 1.0) <= 1e-12);

  // at a vertex with nonzero gradient the critical cone is {0}
  const auto vertex = check_sosc_box(
      problem_with_f("(y1-2)^2", BoxSet::bounds(vec1(0.0), vec1(1.0))), pt({0.0}, {1.0}));
  CHECK(vertex.verdict == Verdict::Holds);
}

TEST_CASE("mixed second-order condition (iv-b)") {
  // K = {0}: vacuous
  const auto vertex = check_condition_ivb(
      problem_with_f("(y1-2)^2", BoxSet::bounds(vec1(0.0), vec1(1.0))), pt({0.0}, {1.0}));
  CHECK(vertex.verdict == Verdict::Holds);

  const auto toy = check_condition_ivb(builtin("toy-convex"), pt({1.0}, {1.0}));
  CHECK(toy.verdict == Verdict::Holds);

  // genuinely failing: zero curvature with a full critical cone
  const auto cubic = check_condition_ivb(problem_with_f("y1^3", BoxSet::whole_space(1)),
                                         pt({0.0}, {0.0}));
  CHECK(cubic.verdict == Verdict::Fails);
  REQUIRE(cubic.worst_direction);
  CHECK(std::abs((*cubic.worst_direction)(0)) == doctest::Approx(1.0));

  // -y^2 on R: -Hw = 2w can only be in N_R(w) = {0} at w = 0, so the
  // condition holds (S_FO is globally {0}); SOSC fails on the same data.
  const BilevelProblem neg = problem_with_f("-y1^2", BoxSet::whole_space(1));
  CHECK(check_condition_ivb(neg, pt({0.0}, {0.0})).verdict == Verdict::Holds);
  CHECK(check_sosc_box(neg, pt({0.0}, {0.0})).verdict == Verdict::Fails);
}

TEST_CASE("check_localization aggregates and certifies") {
  const double y0 = solve_y0();
  const auto rep = check_localization(builtin("mirrlees"), pt({1.0}, {y0}));
  CHECK(rep.certified());
  CHECK(rep.interior_nonsingular.verdict == Verdict::Holds);
  CHECK(rep.sosc.verdict == Verdict::Holds);

  const auto bad = check_localization(problem_with_f("y1^3", BoxSet::whole_space(1)),
                                      pt({0.0}, {0.0}));
  CHECK(!bad.certified());
}

TEST_CASE("admissible directions: Mirrlees family") {
  const double y0 = solve_y0();

  const DirectionCone mir = admissible_directions(builtin("mirrlees"), vec1(1.0), vec1(y0));
  REQUIRE(mir.normals.size() == 1);
  const double expected =
      -std::exp(-(1 - y0) * (1 - y0)) + std::exp(-(1 + y0) * (1 + y0));
  CHECK(mir.normals[0](0) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(mir.contains(vec1(-1.0)));
  CHECK(!mir.contains(vec1(1.0)));
  CHECK(!mir.empty);

  Vec x_bar(2);
  x_bar << 0.5, 0.5;
  const DirectionCone mm =
      admissible_directions(builtin("modified-mirrlees"), x_bar, vec1(y0));
  REQUIRE(mm.normals.size() == 1);
  CHECK(mm.normals[0](0) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(mm.normals[0](1) == doctest::Approx(expected).epsilon(1e-8));
  Vec u(2);
  u << -1.0, 0.3;  // u1 + u2 < 0
  CHECK(mm.contains(u));
  u << 1.0, -0.2;
  CHECK(!mm.contains(u));

  const DirectionCone toy = admissible_directions(builtin("toy-convex"), vec1(1.0), vec1(1.0));
  CHECK(toy.full_space);
  CHECK(toy.contains(vec1(0.77)));

  CHECK_THROWS_AS(admissible_directions(builtin("mirrlees"), vec1(1.0), vec1(0.0)),
                  InvalidArgument);
}

TEST_CASE("admissible direction normals re-derive from AD within 1e-10") {
  const double y0 = solve_y0();
  const BilevelProblem mir = builtin("mirrlees");
  const DirectionCone cone = admissible_directions(mir, vec1(1.0), vec1(y0));
  REQUIRE(cone.normals.size() == 1);
  REQUIRE(cone.competitors.size() == 1);
  const Vec lhs = differentiate(mir.f, EvalPoint{vec1(1.0), cone.competitors[0]}).gradient.head(1);
  const Vec rhs = differentiate(mir.f, EvalPoint{vec1(1.0), vec1(y0)}).gradient.head(1);
  CHECK((cone.normals[0] - (lhs - rhs)).norm() <= 1e-10);
}

TEST_CASE("inf-compactness evidence") {
  const auto mir = check_inf_compactness(builtin("mirrlees"), vec1(1.0));
  CHECK(mir.holds);
  CHECK(mir.min_margin > 5.0);  // sublevel set sits well inside [-10, 10]

  const auto xy1 = check_inf_compactness(builtin("example-xy-1"), vec1(0.0));
  CHECK(!xy1.holds);  // the sublevel set escapes as x moves off 0

  const auto coercive =
      check_inf_compactness(problem_with_f("y1^2", BoxSet::whole_space(1)), vec1(0.0));
  CHECK(coercive.holds);
}

TEST_CASE("empirical inner semicontinuity along directions") {
  const double y0 = solve_y0();
  const BilevelProblem mir = builtin("mirrlees");
  const auto sched = SamplingSchedule::dyadic(14);

  const auto ok = check_inner_semicontinuity_empirical(mir, vec1(1.0), vec1(y0),
                                                       Direction(vec1(-1.0)), sched);
  CHECK(ok.holds);
  CHECK(ok.final_distance <= 1e-3);

  const auto jump = check_inner_semicontinuity_empirical(mir, vec1(1.0), vec1(y0),
                                                         Direction(vec1(1.0)), sched);
  CHECK(!jump.holds);
  CHECK(jump.final_distance == doctest::Approx(2 * y0).epsilon(1e-2));

  const auto toy = check_inner_semicontinuity_empirical(
      builtin("toy-convex"), vec1(0.5), vec1(0.5), Direction(vec1(1.0)), sched);
  CHECK(toy.holds);
}

TEST_CASE("admissible cone members are empirically inner semicontinuous") {
  // soundness spot check on the Mirrlees instance
  const double y0 = solve_y0();
  const BilevelProblem mir = builtin("mirrlees");
  const DirectionCone cone = admissible_directions(mir, vec1(1.0), vec1(y0));
  const auto sched = SamplingSchedule::dyadic(12);
  for (double mag : {0.25, 1.0, 4.0}) {
    const Vec u = vec1(-mag);
    REQUIRE(cone.contains(u));
    CHECK(check_inner_semicontinuity_empirical(mir, vec1(1.0), vec1(y0), Direction(u), sched)
              .holds);
  }
}

TEST_CASE("singleton solution set gives inner semicontinuity in direction 0") {
  const auto rep = inner_semicontinuity_report(builtin("toy-convex"), vec1(0.8), vec1(0.8));
  CHECK(rep.singleton);
  CHECK(rep.admissible.full_space);
  CHECK(rep.inf_compactness.holds);
  const auto sched = SamplingSchedule::dyadic(12);
  CHECK(check_inner_semicontinuity_empirical(builtin("toy-convex"), vec1(0.8), vec1(0.8),
                                             Direction::zero_dir(1), sched)
            .holds);
}
