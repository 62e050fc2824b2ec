#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdfoa/box.hpp"
#include "bdfoa/expr.hpp"

namespace bdfoa {

/// min F(x,y) s.t. y in argmin_{y' in Y} f(x,y'), G(x,y) <= 0.
struct BilevelProblem {
  int n = 0, m = 0;
  ExprAst F, f;
  std::vector<ExprAst> G;  // may be empty (q = 0)
  BoxSet Y;
  std::string name;
  std::optional<EvalPoint> point;  // optional candidate from the config

  int q() const { return static_cast<int>(G.size()); }
};

enum class PointRole { Candidate, FeasibleSample, Reference };

struct ProblemPoint {
  EvalPoint point;
  PointRole role = PointRole::Candidate;
};

/// Moral-hazard contract design data: n_s outputs with values pi_j,
/// output probabilities P(s_j, y), agent utility u(wage), principal
/// utility v(net value), action cost c(y) and reservation utility.
struct PrincipalAgentSpec {
  Vec outputs;                    // pi, length n_s
  std::vector<ExprAst> prob;      // P(s_j, .), ASTs in y only (n = 0)
  ExprAst agent_utility;          // u, AST in x1 (n = 1, m = 0)
  ExprAst principal_utility;      // v, AST in x1 (n = 1, m = 0)
  ExprAst cost;                   // c, AST in y only
  double reservation = 0.0;       // U-bar
  BoxSet wage_box;                // sampling window for wages
  BoxSet action_box;              // becomes Y
};

/// Per-function derivative bundle at one point.
struct EvalBundle {
  Derivatives F, f;
  std::vector<Derivatives> G;
};

/// Loads a problem from a JSON document (see the config schema in the
/// README). Accepts "-inf"/"inf" sentinels in the bound arrays.
BilevelProblem load_problem_json(const std::string& json_text);
BilevelProblem load_problem_file(const std::string& path);

/// Root of (1-y)e^{4y} - (1+y) on [0.9, 1.0] by bisection; the jump
/// ordinate of the Mirrlees solution map.
double solve_y0();

/// Built-in instances: mirrlees, modified-mirrlees, example-xy-1,
/// example-xy3, toy-convex, principal-agent-2.
BilevelProblem builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// Assembles the (BP) form of the principal-agent program: F and f as
/// negative expected utilities, one IR row in G, Y = action box.
/// Validates the probability simplex on a sampled action grid.
BilevelProblem build_principal_agent(const PrincipalAgentSpec& spec);

EvalBundle eval_bundle(const BilevelProblem& prob, const EvalPoint& p);

/// Reference point each built-in problem is analyzed at.
EvalPoint builtin_reference_point(const BilevelProblem& prob);

}  // namespace bdfoa
