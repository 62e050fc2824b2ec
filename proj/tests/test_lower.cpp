#include <doctest.h>

#include <cmath>

#include "bdfoa/lower.hpp"

using namespace bdfoa;

namespace {
Vec vec1(double a) { return Vec::Constant(1, a); }
}  // namespace

TEST_CASE("solve_lower: Mirrlees double well at x = 1") {
  const BilevelProblem mir = builtin("mirrlees");
  const double y0 = solve_y0();
  const SolutionSample s = solve_lower(mir, vec1(1.0));
  REQUIRE(s.minimizers.size() == 2);
  CHECK(s.minimizers[0](0) == doctest::Approx(-y0).epsilon(5e-4));
  CHECK(s.minimizers[1](0) == doctest::Approx(y0).epsilon(5e-4));
  CHECK(!s.boundary_flag);
  // symmetry of the minimizer set under negation
  CHECK(std::abs(s.minimizers[0](0) + s.minimizers[1](0)) <= 1e-6);
  // V(1) = f(1, y0)
  const double v = -std::exp(-(1 + y0) * (1 + y0)) - std::exp(-(1 - y0) * (1 - y0));
  CHECK(s.value == doctest::Approx(v).epsilon(1e-9));
}

TEST_CASE("solve_lower matches S(x) = 1/x on example-xy-1") {
  const BilevelProblem prob = builtin("example-xy-1");
  for (const double x : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
    const SolutionSample s = solve_lower(prob, vec1(x));
    REQUIRE(s.minimizers.size() == 1);
    CHECK(s.minimizers[0](0) == doctest::Approx(1.0 / x).epsilon(1e-6));
    CHECK(!s.boundary_flag);
  }
  const SolutionSample at0 = solve_lower(prob, vec1(0.0));
  REQUIRE(at0.minimizers.size() == 1);
  CHECK(std::abs(at0.minimizers[0](0)) <= 1e-6);

  // 1/x reaches the window edge at |x| = 0.1
  CHECK(solve_lower(prob, vec1(0.1)).boundary_flag);
  CHECK(solve_lower(prob, vec1(-0.1)).boundary_flag);
}

TEST_CASE("solve_lower matches S(x) = -(x/4)^(1/9) on example-xy3") {
  const BilevelProblem prob = builtin("example-xy3");
  const SolutionSample at4 = solve_lower(prob, vec1(4.0));
  REQUIRE(at4.minimizers.size() == 1);
  CHECK(at4.minimizers[0](0) == doctest::Approx(-1.0).epsilon(1e-6));

  for (int k = 0; k <= 20; ++k) {
    const double x = -2.0 + 4.0 * k / 20.0;
    const double expected = -std::copysign(std::pow(std::abs(x) / 4.0, 1.0 / 9.0), x);
    const SolutionSample s = solve_lower(prob, vec1(x));
    REQUIRE(!s.minimizers.empty());
    CHECK(s.minimizers.size() == 1);
    CHECK(s.minimizers[0](0) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("minimizers pass the box stationarity test") {
  for (const char* name : {"mirrlees", "example-xy-1", "toy-convex", "principal-agent-2"}) {
    const BilevelProblem prob = builtin(name);
    Vec x = Vec::Constant(prob.n, 1.0);
    const SolutionSample s = solve_lower(prob, x);
    if (s.boundary_flag) continue;  // window-relative argmin need not be Y-stationary
    for (const Vec& y : s.minimizers)
      CHECK(box_stationarity_residual(prob, x, y) <= 1e-9);
  }
}

TEST_CASE("stationary_set: bracketing finds all three Mirrlees stationary points") {
  const BilevelProblem mir = builtin("mirrlees");
  const double y0 = solve_y0();
  const StationarySample s = stationary_set(mir, vec1(1.0));
  REQUIRE(s.stationary_points.size() == 3);
  CHECK(s.stationary_points[0].y(0) == doctest::Approx(-y0).epsilon(1e-8));
  CHECK(std::abs(s.stationary_points[1].y(0)) <= 1e-9);
  CHECK(s.stationary_points[2].y(0) == doctest::Approx(y0).epsilon(1e-8));
  for (const auto& p : s.stationary_points) CHECK(p.residual <= 1e-9);
}

TEST_CASE("stationary_set: simple instances") {
  const StationarySample toy = stationary_set(builtin("toy-convex"), vec1(0.7));
  REQUIRE(toy.stationary_points.size() == 1);
  CHECK(toy.stationary_points[0].y(0) == doctest::Approx(0.7).epsilon(1e-10));

  const StationarySample xy1 = stationary_set(builtin("example-xy-1"), vec1(0.0));
  REQUIRE(xy1.stationary_points.size() == 1);
  CHECK(std::abs(xy1.stationary_points[0].y(0)) <= 1e-10);
}

TEST_CASE("stationary_set honors box bounds") {
  // f = (y - 2)^2 on Y = [0, 1]: interior gradient never vanishes on the
  // window, the upper bound y = 1 is the box-stationary point.
  BilevelProblem prob;
  prob.n = 1;
  prob.m = 1;
  prob.name = "boxed";
  prob.F = parse("0", 1, 1);
  prob.f = parse("(y1-2)^2", 1, 1);
  prob.Y = BoxSet::bounds(vec1(0.0), vec1(1.0));
  const StationarySample s = stationary_set(prob, vec1(0.0));
  REQUIRE(s.stationary_points.size() == 1);
  CHECK(s.stationary_points[0].y(0) == doctest::Approx(1.0));
  const SolutionSample sol = solve_lower(prob, vec1(0.0));
  REQUIRE(sol.minimizers.size() == 1);
  CHECK(sol.minimizers[0](0) == doctest::Approx(1.0));
  CHECK(!sol.boundary_flag);  // the box bound, not the window, is active
}

TEST_CASE("value_function: table values and monotonicity") {
  const BilevelProblem mir = builtin("mirrlees");
  std::vector<Vec> xs;
  for (int k = 0; k <= 10; ++k) xs.push_back(vec1(0.5 + 0.1 * k));
  const auto table = value_function(mir, xs);
  REQUIRE(table.size() == xs.size());
  // V(1) is about -1.020
  CHECK(table[5].value == doctest::Approx(-1.0198658).epsilon(1e-5));
  for (size_t i = 0; i + 1 < table.size(); ++i) CHECK(table[i].value > table[i + 1].value);

  const auto toy = value_function(builtin("toy-convex"), {vec1(-0.3), vec1(1.7)});
  CHECK(std::abs(toy[0].value) <= 1e-12);
  CHECK(std::abs(toy[1].value) <= 1e-12);
}

TEST_CASE("directional_solution_set: branch jump at x = 1") {
  const BilevelProblem mir = builtin("mirrlees");
  const double y0 = solve_y0();
  const auto sched = SamplingSchedule::dyadic(20);

  const auto minus = directional_solution_set(mir, vec1(1.0), Direction(vec1(-1.0)), sched);
  REQUIRE(minus.size() == 1);
  CHECK(minus[0](0) == doctest::Approx(y0).epsilon(1e-3));

  const auto plus = directional_solution_set(mir, vec1(1.0), Direction(vec1(1.0)), sched);
  REQUIRE(plus.size() == 1);
  CHECK(plus[0](0) == doctest::Approx(-y0).epsilon(1e-3));

  const auto toy = directional_solution_set(builtin("toy-convex"), vec1(0.0),
                                            Direction(vec1(1.0)), sched);
  REQUIRE(toy.size() == 1);
  CHECK(std::abs(toy[0](0)) <= 1e-3);
}

TEST_CASE("localization_track: single-valued branches of the Mirrlees stationary map") {
  const BilevelProblem mir = builtin("mirrlees");
  const double y0 = solve_y0();
  const auto sched = SamplingSchedule::dyadic(12);

  const auto down = localization_track(mir, vec1(1.0), vec1(y0), Direction(vec1(-1.0)),
                                       sched, 0.4);
  CHECK(down.single_valued);
  CHECK(!down.track_lost);

  const auto up = localization_track(mir, vec1(1.0), vec1(y0), Direction(vec1(1.0)),
                                     sched, 0.4);
  CHECK(up.single_valued);  // the stationary branch persists past x = 1
  CHECK(up.lipschitz_estimate > 0.0);
  CHECK(up.lipschitz_estimate < 1.0);  // |dy/dx| is about 1/20 on this branch

  // degenerate lower objective: every y is stationary
  BilevelProblem flat;
  flat.n = 1;
  flat.m = 1;
  flat.name = "flat";
  flat.F = parse("0", 1, 1);
  flat.f = parse("0", 1, 1);
  flat.Y = BoxSet::whole_space(1);
  const auto lost = localization_track(flat, vec1(0.0), vec1(0.0), Direction(vec1(1.0)),
                                       SamplingSchedule::dyadic(3), 0.4);
  CHECK(!lost.single_valued);
}
