#include <doctest.h>

#include <cmath>
#include <random>

#include "bdfoa/expr.hpp"
#include "bdfoa/problems.hpp"

using namespace bdfoa;

namespace {

EvalPoint pt1(double x, double y) {
  EvalPoint p;
  p.x = Vec::Constant(1, x);
  p.y = Vec::Constant(1, y);
  return p;
}

// Random well-formed AST over the parseable subset (nonnegative constants).
NodeRef random_ast(std::mt19937& rng, int n, int m, int depth) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 8);
  std::uniform_real_distribution<double> cst(0.0, 10.0);
  switch (kind(rng)) {
    case 0:
      return make_constant(cst(rng));
    case 1: {
      std::uniform_int_distribution<int> which(0, n + m - 1);
      const int i = which(rng);
      return i < n ? make_var(VarSpace::Upper, i) : make_var(VarSpace::Lower, i - n);
    }
    case 2:
      return make_unary(NodeKind::Neg, random_ast(rng, n, m, depth - 1));
    case 3:
      return make_binary(NodeKind::Add, random_ast(rng, n, m, depth - 1),
                         random_ast(rng, n, m, depth - 1));
    case 4:
      return make_binary(NodeKind::Sub, random_ast(rng, n, m, depth - 1),
                         random_ast(rng, n, m, depth - 1));
    case 5:
      return make_binary(NodeKind::Mul, random_ast(rng, n, m, depth - 1),
                         random_ast(rng, n, m, depth - 1));
    case 6:
      return make_binary(NodeKind::Div, random_ast(rng, n, m, depth - 1),
                         random_ast(rng, n, m, depth - 1));
    case 7: {
      std::uniform_int_distribution<int> p(-3, 12);
      return make_pow(random_ast(rng, n, m, depth - 1), static_cast<double>(p(rng)));
    }
    default: {
      std::uniform_int_distribution<int> f(0, 4);
      return make_call(static_cast<FuncId>(f(rng)), random_ast(rng, n, m, depth - 1));
    }
  }
}

}  // namespace

TEST_CASE("parse accepts the paper expressions") {
  CHECK_NOTHROW(parse("x1*y1^3 + y1^12", 1, 1));
  CHECK_NOTHROW(parse("0", 1, 1));
  const ExprAst zero = parse("0", 1, 1);
  CHECK(zero.root->kind == NodeKind::Constant);
}

TEST_CASE("parse reports positions and bad identifiers") {
  try {
    parse("x1*(", 1, 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.column == 4);
  }
  CHECK_THROWS_AS(parse("z1 + 1", 1, 1), ParseError);
  CHECK_THROWS_AS(parse("x2", 1, 1), ParseError);  // index out of range
  CHECK_THROWS_AS(parse("y2 + y1", 2, 1), ParseError);
  CHECK_THROWS_AS(parse("x1 +", 1, 1), ParseError);
  CHECK_THROWS_AS(parse("exp x1", 1, 1), ParseError);
}

TEST_CASE("evaluate matches hand values") {
  const ExprAst f = parse("-x1*exp(-(y1+1)^2) - exp(-(y1-1)^2)", 1, 1);
  CHECK(evaluate(f, pt1(1.0, 0.0)) == doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-14));

  const ExprAst g = parse("(x1*y1-1)^2*(1+y1^2)", 1, 1);
  CHECK(evaluate(g, pt1(2.0, 0.5)) == doctest::Approx(0.0));

  const ExprAst inv = parse("1/x1", 1, 0);
  EvalPoint p;
  p.x = Vec::Zero(1);
  p.y = Vec(0);
  CHECK_THROWS_AS(evaluate(inv, p), DomainError);
}

TEST_CASE("domain errors name the offending subexpression") {
  const ExprAst bad = parse("log(x1 - 2)", 1, 0);
  EvalPoint p;
  p.x = Vec::Constant(1, 1.0);
  p.y = Vec(0);
  try {
    evaluate(bad, p);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.subexpression == "log(x1 - 2)");
  }
  EvalPoint q;
  q.x = Vec::Constant(1, 1.0);
  q.y = Vec(0);
  CHECK_THROWS_AS(evaluate(parse("sqrt(-x1)", 1, 0), q), DomainError);
}

TEST_CASE("differentiate: stationarity of the Mirrlees lower objective at y0") {
  const ExprAst f = parse("-x1*exp(-(y1+1)^2) - exp(-(y1-1)^2)", 1, 1);
  const double y0 = solve_y0();
  const Derivatives d = differentiate(f, pt1(1.0, y0));
  CHECK(std::abs(d.gradient(1)) <= 1e-9);  // df/dy
  CHECK(d.hessian_asymmetry <= 1e-12);
  CHECK((d.hessian - d.hessian.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("differentiate: constants and double roots") {
  const Derivatives c = differentiate(parse("3.5", 1, 1), pt1(0.3, -0.2));
  CHECK(c.gradient.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.hessian.cwiseAbs().maxCoeff() == 0.0);

  const Derivatives d = differentiate(parse("(x1*y1-1)^2*(1+y1^2)", 1, 1), pt1(2.0, 0.5));
  CHECK(std::abs(d.gradient(1)) <= 1e-14);
}

TEST_CASE("fd_check on the spec points") {
  const ExprAst f = parse("-x1*exp(-(y1+1)^2) - exp(-(y1-1)^2)", 1, 1);
  CHECK(fd_check(f, pt1(1.3, -0.7), 1e-5) <= 1e-6);

  const ExprAst lin = parse("2*x1 - 3*y1 + 1", 1, 1);
  CHECK(fd_check(lin, pt1(0.4, 1.7), 1e-3) <= 1e-10);

  const BilevelProblem mm = builtin("modified-mirrlees");
  EvalPoint p;
  p.x = Vec(2);
  p.x << 0.5, 0.5;
  p.y = Vec::Constant(1, 0.9);
  CHECK(fd_check(mm.F, p, 1e-5) <= 1e-6);
}

TEST_CASE("AD matches finite differences at random points for every builtin") {
  std::mt19937 rng(20240811);
  for (const auto& name : builtin_names()) {
    const BilevelProblem prob = builtin(name);
    const bool pa = name == "principal-agent-2";
    std::uniform_real_distribution<double> ux(pa ? 0.5 : -1.5, pa ? 4.0 : 1.5);
    std::uniform_real_distribution<double> uy(pa ? 0.1 : -1.5, pa ? 0.9 : 1.5);
    for (int t = 0; t < 100; ++t) {
      EvalPoint p;
      p.x = Vec::NullaryExpr(prob.n, [&](Eigen::Index) { return ux(rng); });
      p.y = Vec::NullaryExpr(prob.m, [&](Eigen::Index) { return uy(rng); });
      CHECK(fd_check(prob.F, p) <= 1e-6);
      CHECK(fd_check(prob.f, p) <= 1e-6);
      for (const auto& g : prob.G) CHECK(fd_check(g, p) <= 1e-6);
    }
  }
}

TEST_CASE("parse-print round trip is the identity on 1000 random ASTs") {
  std::mt19937 rng(7);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    ExprAst ast{random_ast(rng, 2, 2, 4), 2, 2};
    const std::string text = print(ast);
    const ExprAst back = parse(text, 2, 2);
    if (!structurally_equal(ast, back)) {
      CAPTURE(text);
      FAIL_CHECK("round trip changed the tree");
    }
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("derivative_single agrees with the full gradient") {
  const BilevelProblem mm = builtin("modified-mirrlees");
  EvalPoint p;
  p.x = Vec(2);
  p.x << 0.7, 0.1;
  p.y = Vec::Constant(1, -0.3);
  const Derivatives d = differentiate(mm.f, p);
  for (int k = 0; k < 3; ++k)
    CHECK(derivative_single(mm.f, p, k) == doctest::Approx(d.gradient(k)).epsilon(1e-13));
}

TEST_CASE("polynomial degree analysis") {
  CHECK(polynomial_degree(parse("x1 - 1", 1, 1)) == 1);
  CHECK(polynomial_degree(parse("(y1-x1)^2", 1, 1)) == 2);
  CHECK(polynomial_degree(parse("exp(x1)", 1, 1)) == -1);
  CHECK(polynomial_degree(parse("exp(2)*x1", 1, 1)) == 1);
  CHECK(polynomial_degree(parse("x1/y1", 1, 1)) == -1);
  CHECK(polynomial_degree(parse("x1*y1^3 + y1^12", 1, 1)) == 12);
}
