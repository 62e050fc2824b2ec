#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "bdfoa/problems.hpp"

using namespace bdfoa;

TEST_CASE("solve_y0: residuals and bracket") {
  const auto t0 = std::chrono::steady_clock::now();
  const double y0 = solve_y0();
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  CHECK(ms < 1.0);

  CHECK(std::abs((1.0 - y0) * std::exp(4.0 * y0) - (1.0 + y0)) <= 1e-12);
  CHECK(std::abs((1.0 - y0) * std::exp(4.0 * y0) / (1.0 + y0) - 1.0) <= 1e-10);
  // bracket signs
  CHECK((1.0 - 0.9) * std::exp(3.6) - 1.9 > 0.0);
  CHECK((1.0 - 1.0) * std::exp(4.0) - 2.0 < 0.0);
  // the root is 0.9575040..., 5.04e-4 away from the paper's truncated 0.957
  CHECK(y0 == doctest::Approx(0.95750402407726874).epsilon(1e-12));
}

TEST_CASE("builtins construct with the documented shapes") {
  const BilevelProblem mm = builtin("modified-mirrlees");
  CHECK(mm.n == 2);
  CHECK(mm.m == 1);
  CHECK(mm.q() == 0);

  const BilevelProblem xy1 = builtin("example-xy-1");
  CHECK(evaluate(xy1.F, builtin_reference_point(xy1)) == 0.0);

  const BilevelProblem toy = builtin("toy-convex");
  CHECK(toy.n == 1);
  CHECK(!toy.Y.bounded());

  CHECK_THROWS_AS(builtin("nope"), InvalidArgument);
}

TEST_CASE("modified-mirrlees: F vanishes at the reference point") {
  const BilevelProblem mm = builtin("modified-mirrlees");
  const EvalPoint p = builtin_reference_point(mm);
  CHECK(std::abs(evaluate(mm.F, p)) <= 1e-10);
}

TEST_CASE("eval_bundle hand-checked derivatives") {
  const double y0 = solve_y0();

  const BilevelProblem mm = builtin("modified-mirrlees");
  EvalPoint p;
  p.x = Vec(2);
  p.x << 0.5, 0.5;
  p.y = Vec::Constant(1, y0);
  const EvalBundle b = eval_bundle(mm, p);
  CHECK(b.F.gradient(0) == doctest::Approx(1.0 + y0).epsilon(1e-12));

  const BilevelProblem toy = builtin("toy-convex");
  EvalPoint q;
  q.x = Vec::Constant(1, 1.0);
  q.y = Vec::Constant(1, 1.0);
  CHECK(eval_bundle(toy, q).F.gradient.cwiseAbs().maxCoeff() == 0.0);

  const BilevelProblem mir = builtin("mirrlees");
  EvalPoint r;
  r.x = Vec::Constant(1, 1.0);
  r.y = Vec::Constant(1, y0);
  CHECK(std::abs(eval_bundle(mir, r).f.gradient(1)) <= 1e-9);
}

TEST_CASE("load_problem: schema, sentinels, errors") {
  const std::string good = R"json({
    "name": "mirrlees",
    "n": 1, "m": 1,
    "F": "(x1-2)^2 + (y1-1)^2",
    "f": "-x1*exp(-(y1+1)^2) - exp(-(y1-1)^2)",
    "G": [],
    "Y_lower": ["-inf"], "Y_upper": ["inf"]
  })json";
  const BilevelProblem prob = load_problem_json(good);
  CHECK(prob.name == "mirrlees");
  CHECK(!prob.Y.bounded());
  CHECK(std::isinf(prob.Y.lower(0)));

  const std::string with_g = R"json({
    "name": "g1", "n": 1, "m": 1,
    "F": "0", "f": "(y1-x1)^2",
    "G": ["x1 - 1"],
    "Y_lower": [0], "Y_upper": [1]
  })json";
  CHECK(load_problem_json(with_g).q() == 1);

  const std::string bad_dim = R"json({
    "name": "bad", "n": 1, "m": 1,
    "F": "y2", "f": "0",
    "G": [],
    "Y_lower": [0], "Y_upper": [1]
  })json";
  CHECK_THROWS(load_problem_json(bad_dim));
  CHECK_THROWS_AS(load_problem_json("{}"), InvalidArgument);
  CHECK_THROWS_AS(load_problem_json("not json"), InvalidArgument);
}

TEST_CASE("principal-agent builder") {
  const BilevelProblem pa = builtin("principal-agent-2");
  CHECK(pa.n == 2);
  CHECK(pa.m == 1);
  CHECK(pa.q() == 1);
  CHECK(pa.Y.lower(0) == doctest::Approx(0.05));

  // f == -(sum u(x_j) P_j) + c and IR == f + U on random points
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(0.5, 6.0), uy(0.1, 0.9);
  for (int t = 0; t < 100; ++t) {
    EvalPoint p;
    p.x = Vec::NullaryExpr(2, [&](Eigen::Index) { return ux(rng); });
    p.y = Vec::Constant(1, uy(rng));
    const double f = evaluate(pa.f, p);
    const double manual = -(std::sqrt(p.x(0)) * (1.0 - p.y(0)) + std::sqrt(p.x(1)) * p.y(0)) +
                          p.y(0) * p.y(0);
    CHECK(f == doctest::Approx(manual).epsilon(1e-12));
    CHECK(evaluate(pa.G[0], p) == doctest::Approx(f + 0.1).epsilon(1e-12));
  }

  // simplex violation: P(s2, y) = 2y on [0, 1]
  PrincipalAgentSpec bad;
  bad.outputs = Vec(2);
  bad.outputs << 0.0, 10.0;
  bad.prob.push_back(parse("1 - 2*y1", 0, 1));
  bad.prob.push_back(parse("2*y1", 0, 1));
  bad.agent_utility = parse("sqrt(x1)", 1, 0);
  bad.principal_utility = parse("x1", 1, 0);
  bad.cost = parse("y1^2", 0, 1);
  bad.reservation = 0.1;
  bad.wage_box = BoxSet::bounds(Vec::Constant(2, 0.01), Vec::Constant(2, 8.0));
  bad.action_box = BoxSet::bounds(Vec::Zero(1), Vec::Ones(1));
  CHECK_THROWS_AS(build_principal_agent(bad), InvalidArgument);
}

TEST_CASE("eval_bundle gradients pass fd_check on random points") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (const char* name : {"mirrlees", "modified-mirrlees", "toy-convex"}) {
    const BilevelProblem prob = builtin(name);
    for (int t = 0; t < 100; ++t) {
      EvalPoint p;
      p.x = Vec::NullaryExpr(prob.n, [&](Eigen::Index) { return u(rng); });
      p.y = Vec::NullaryExpr(prob.m, [&](Eigen::Index) { return u(rng); });
      CHECK(fd_check(prob.F, p) <= 1e-6);
      CHECK(fd_check(prob.f, p) <= 1e-6);
    }
  }
}
