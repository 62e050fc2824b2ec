#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bdfoa/common.hpp"

namespace bdfoa {

enum class NodeKind { Constant, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class FuncId { Exp, Log, Sqrt, Sin, Cos };
enum class VarSpace { Upper, Lower };  // x or y

struct ExprNode;
using NodeRef = std::shared_ptr<const ExprNode>;

/// Immutable expression tree node. Pow stores a constant exponent;
/// a non-constant exponent is not representable (see the grammar).
struct ExprNode {
  NodeKind kind;
  double constant = 0.0;              // Constant
  VarSpace space = VarSpace::Upper;   // Var
  int index = 0;                      // Var, 0-based
  FuncId func = FuncId::Exp;          // Call
  double exponent = 0.0;              // Pow
  NodeRef a, b;
};

/// Parsed expression with its declared variable dimensions.
struct ExprAst {
  NodeRef root;
  int n = 0;
  int m = 0;
};

/// Point (x, y) in R^n x R^m.
struct EvalPoint {
  Vec x, y;
};

/// Value, gradient and Hessian with respect to (x1..xn, y1..ym).
/// The Hessian is symmetrized on output; `hessian_asymmetry` records the
/// maximum |H - H^T| entry seen before symmetrization.
struct Derivatives {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
  double hessian_asymmetry = 0.0;
};

// Node constructors for programmatic AST assembly.
NodeRef make_constant(double v);
NodeRef make_var(VarSpace space, int index);
NodeRef make_unary(NodeKind kind, NodeRef a);
NodeRef make_binary(NodeKind kind, NodeRef a, NodeRef b);
NodeRef make_pow(NodeRef a, double exponent);
NodeRef make_call(FuncId f, NodeRef a);

/// Parses `text` against the declared dimensions.
///
/// Grammar ('^' binds tighter than unary '-', so "-a^2" is -(a^2)):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | atom ('^' ['-'] number)?
///   atom   := number | ident | func '(' expr ')' | '(' expr ')'
///   ident  := 'x' digits | 'y' digits,  func in {exp, log, sqrt, sin, cos}
ExprAst parse(const std::string& text, int n, int m);

/// Canonical printing; parse(print(ast)) is structurally equal to ast
/// for any tree whose constants are nonnegative (the parseable subset).
std::string print(const ExprAst& ast);
std::string print(const ExprNode& node);

bool structurally_equal(const ExprAst& a, const ExprAst& b);

/// Substitutes variables by expressions (used by the principal-agent
/// builder); `xs`/`ys` may hold null entries meaning "keep the variable".
ExprAst substitute(const ExprAst& ast, const std::vector<NodeRef>& xs,
                   const std::vector<NodeRef>& ys, int out_n, int out_m);

/// Polynomial degree of the expression, or -1 if it is not a polynomial
/// in (x, y). Constants inside calls of constant arguments count as degree 0.
int polynomial_degree(const ExprAst& ast);

double evaluate(const ExprAst& ast, const EvalPoint& p);

Derivatives differentiate(const ExprAst& ast, const EvalPoint& p);

/// d(ast)/dz_k at p where z = (x1..xn, y1..ym); first-order fast path.
double derivative_single(const ExprAst& ast, const EvalPoint& p, int k);

/// Max relative error between AD and central finite differences over all
/// gradient and Hessian entries: max |AD - FD| / max(1, |AD|).
/// Gradient entries difference expression values; Hessian entries
/// difference the analytic gradient.
double fd_check(const ExprAst& ast, const EvalPoint& p, double h = 1e-5);

}  // namespace bdfoa
