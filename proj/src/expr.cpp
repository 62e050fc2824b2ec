#include "bdfoa/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <vector>

#include "bdfoa/dual.hpp"

namespace bdfoa {

NodeRef make_constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Constant;
  n->constant = v;
  return n;
}

NodeRef make_var(VarSpace space, int index) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Var;
  n->space = space;
  n->index = index;
  return n;
}

NodeRef make_unary(NodeKind kind, NodeRef a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->a = std::move(a);
  return n;
}

NodeRef make_binary(NodeKind kind, NodeRef a, NodeRef b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodeRef make_pow(NodeRef a, double exponent) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Pow;
  n->a = std::move(a);
  n->exponent = exponent;
  return n;
}

NodeRef make_call(FuncId f, NodeRef a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Call;
  n->func = f;
  n->a = std::move(a);
  return n;
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

namespace {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  TokKind kind;
  double number = 0.0;
  std::string ident;
  int column = 0;  // 1-based
};

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> toks;
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && text[j] == '.') {
        ++j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
          ++k;
          while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
          j = k;
        }
      }
      Token t;
      t.kind = TokKind::Number;
      t.number = std::strtod(text.substr(i, j - i).c_str(), nullptr);
      t.column = col;
      toks.push_back(t);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])))) ++j;
      Token t;
      t.kind = TokKind::Ident;
      t.ident = text.substr(i, j - i);
      t.column = col;
      toks.push_back(t);
      i = j;
      continue;
    }
    TokKind k;
    switch (c) {
      case '+': k = TokKind::Plus; break;
      case '-': k = TokKind::Minus; break;
      case '*': k = TokKind::Star; break;
      case '/': k = TokKind::Slash; break;
      case '^': k = TokKind::Caret; break;
      case '(': k = TokKind::LParen; break;
      case ')': k = TokKind::RParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", col);
    }
    toks.push_back(Token{k, 0.0, {}, col});
    ++i;
  }
  Token end;
  end.kind = TokKind::End;
  end.column = toks.empty() ? 1 : toks.back().column;  // EOF reports the last token
  toks.push_back(end);
  return toks;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, int n, int m) : toks_(std::move(toks)), n_(n), m_(m) {}

  NodeRef parse_all() {
    NodeRef e = parse_expr();
    if (cur().kind != TokKind::End)
      throw ParseError("unexpected trailing input", cur().column);
    return e;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  void advance() { ++pos_; }

  NodeRef parse_expr() {
    NodeRef e = parse_term();
    while (cur().kind == TokKind::Plus || cur().kind == TokKind::Minus) {
      const NodeKind k = cur().kind == TokKind::Plus ? NodeKind::Add : NodeKind::Sub;
      advance();
      e = make_binary(k, e, parse_term());
    }
    return e;
  }

  NodeRef parse_term() {
    NodeRef e = parse_factor();
    while (cur().kind == TokKind::Star || cur().kind == TokKind::Slash) {
      const NodeKind k = cur().kind == TokKind::Star ? NodeKind::Mul : NodeKind::Div;
      advance();
      e = make_binary(k, e, parse_factor());
    }
    return e;
  }

  // '^' binds tighter than unary '-': "-a^2" is -(a^2).
  NodeRef parse_factor() {
    if (cur().kind == TokKind::Minus) {
      advance();
      return make_unary(NodeKind::Neg, parse_factor());
    }
    NodeRef e = parse_atom();
    if (cur().kind == TokKind::Caret) {
      advance();
      double sign = 1.0;
      if (cur().kind == TokKind::Minus) {
        sign = -1.0;
        advance();
      }
      if (cur().kind != TokKind::Number)
        throw ParseError("exponent must be a numeric constant", cur().column);
      const double p = sign * cur().number;
      advance();
      e = make_pow(e, p);
    }
    return e;
  }

  NodeRef parse_atom() {
    const Token& t = cur();
    switch (t.kind) {
      case TokKind::Number: {
        advance();
        return make_constant(t.number);
      }
      case TokKind::Ident: {
        advance();
        return resolve_ident(t);
      }
      case TokKind::LParen: {
        advance();
        NodeRef e = parse_expr();
        if (cur().kind != TokKind::RParen)
          throw ParseError("expected ')'", cur().column);
        advance();
        return e;
      }
      case TokKind::End:
        throw ParseError("unexpected end of input", t.column);
      default:
        throw ParseError("unexpected token", t.column);
    }
  }

  NodeRef resolve_ident(const Token& t) {
    static const std::pair<const char*, FuncId> funcs[] = {
        {"exp", FuncId::Exp}, {"log", FuncId::Log}, {"sqrt", FuncId::Sqrt},
        {"sin", FuncId::Sin}, {"cos", FuncId::Cos}};
    for (const auto& [name, id] : funcs) {
      if (t.ident == name) {
        if (cur().kind != TokKind::LParen)
          throw ParseError("function '" + t.ident + "' requires '('", cur().column);
        advance();
        NodeRef arg = parse_expr();
        if (cur().kind != TokKind::RParen)
          throw ParseError("expected ')'", cur().column);
        advance();
        return make_call(id, arg);
      }
    }
    // Variable: x<digits> or y<digits>, 1-based in the surface syntax.
    if ((t.ident[0] == 'x' || t.ident[0] == 'y') && t.ident.size() > 1) {
      bool digits = true;
      for (size_t i = 1; i < t.ident.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(t.ident[i]));
      if (digits) {
        const int idx = std::atoi(t.ident.c_str() + 1);
        const bool upper = t.ident[0] == 'x';
        const int dim = upper ? n_ : m_;
        if (idx < 1 || idx > dim)
          throw ParseError("variable index out of range: " + t.ident, t.column);
        return make_var(upper ? VarSpace::Upper : VarSpace::Lower, idx - 1);
      }
    }
    throw ParseError("unknown identifier '" + t.ident + "'", t.column);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  int n_, m_;
};

}  // namespace

ExprAst parse(const std::string& text, int n, int m) {
  if (n < 0 || m < 0) throw DimensionError("negative dimension");
  Parser p(lex(text), n, m);
  return ExprAst{p.parse_all(), n, m};
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

// Precedence: Add/Sub 1, Mul/Div 2, Neg 3, Pow 4, atoms 5.
int precedence(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

const char* func_name(FuncId f) {
  switch (f) {
    case FuncId::Exp: return "exp";
    case FuncId::Log: return "log";
    case FuncId::Sqrt: return "sqrt";
    case FuncId::Sin: return "sin";
    case FuncId::Cos: return "cos";
  }
  return "?";
}

void print_rec(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, bool parens, std::string& out) {
  if (parens) {
    out += '(';
    print_rec(child, out);
    out += ')';
  } else {
    print_rec(child, out);
  }
}

void print_rec(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Constant:
      out += format_exact(n.constant);
      return;
    case NodeKind::Var:
      out += (n.space == VarSpace::Upper ? 'x' : 'y');
      out += std::to_string(n.index + 1);
      return;
    case NodeKind::Neg: {
      out += '-';
      print_child(*n.a, precedence(*n.a) < 3, out);
      return;
    }
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const int prec = precedence(n);
      print_child(*n.a, precedence(*n.a) < prec, out);
      switch (n.kind) {
        case NodeKind::Add: out += " + "; break;
        case NodeKind::Sub: out += " - "; break;
        case NodeKind::Mul: out += "*"; break;
        default: out += "/"; break;
      }
      // Right operand is wrapped on ties to preserve left associativity.
      print_child(*n.b, precedence(*n.b) <= prec, out);
      return;
    }
    case NodeKind::Pow: {
      // The base must be an atom; "(-a)^p" needs the parentheses.
      print_child(*n.a, precedence(*n.a) != 5, out);
      out += '^';
      out += format_exact(n.exponent);
      return;
    }
    case NodeKind::Call: {
      out += func_name(n.func);
      out += '(';
      print_rec(*n.a, out);
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string print(const ExprNode& node) {
  std::string out;
  print_rec(node, out);
  return out;
}

std::string print(const ExprAst& ast) { return print(*ast.root); }

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
  if (a.n != b.n || a.m != b.m) return false;
  struct Cmp {
    static bool eq(const ExprNode& x, const ExprNode& y) {
      if (x.kind != y.kind) return false;
      switch (x.kind) {
        case NodeKind::Constant: return x.constant == y.constant;
        case NodeKind::Var: return x.space == y.space && x.index == y.index;
        case NodeKind::Neg: return eq(*x.a, *y.a);
        case NodeKind::Pow: return x.exponent == y.exponent && eq(*x.a, *y.a);
        case NodeKind::Call: return x.func == y.func && eq(*x.a, *y.a);
        default: return eq(*x.a, *y.a) && eq(*x.b, *y.b);
      }
    }
  };
  return Cmp::eq(*a.root, *b.root);
}

ExprAst substitute(const ExprAst& ast, const std::vector<NodeRef>& xs,
                   const std::vector<NodeRef>& ys, int out_n, int out_m) {
  struct Sub {
    const std::vector<NodeRef>& xs;
    const std::vector<NodeRef>& ys;
    NodeRef run(const ExprNode& n) const {
      switch (n.kind) {
        case NodeKind::Constant: return make_constant(n.constant);
        case NodeKind::Var: {
          const auto& table = n.space == VarSpace::Upper ? xs : ys;
          if (n.index < static_cast<int>(table.size()) && table[n.index])
            return table[n.index];
          return make_var(n.space, n.index);
        }
        case NodeKind::Neg: return make_unary(NodeKind::Neg, run(*n.a));
        case NodeKind::Pow: return make_pow(run(*n.a), n.exponent);
        case NodeKind::Call: return make_call(n.func, run(*n.a));
        default: return make_binary(n.kind, run(*n.a), run(*n.b));
      }
    }
  };
  return ExprAst{Sub{xs, ys}.run(*ast.root), out_n, out_m};
}

int polynomial_degree(const ExprAst& ast) {
  struct Deg {
    static std::optional<int> run(const ExprNode& n) {
      switch (n.kind) {
        case NodeKind::Constant: return 0;
        case NodeKind::Var: return 1;
        case NodeKind::Neg: return run(*n.a);
        case NodeKind::Add:
        case NodeKind::Sub: {
          auto a = run(*n.a), b = run(*n.b);
          if (!a || !b) return std::nullopt;
          return std::max(*a, *b);
        }
        case NodeKind::Mul: {
          auto a = run(*n.a), b = run(*n.b);
          if (!a || !b) return std::nullopt;
          return *a + *b;
        }
        case NodeKind::Div: {
          auto a = run(*n.a), b = run(*n.b);
          if (!a || !b || *b != 0) return std::nullopt;
          return *a;
        }
        case NodeKind::Pow: {
          auto a = run(*n.a);
          if (!a) return std::nullopt;
          if (*a == 0) return 0;
          const double p = n.exponent;
          if (p != std::floor(p) || p < 0) return std::nullopt;
          return *a * static_cast<int>(p);
        }
        case NodeKind::Call: {
          auto a = run(*n.a);
          if (a && *a == 0) return 0;  // constant argument
          return std::nullopt;
        }
      }
      return std::nullopt;
    }
  };
  auto d = Deg::run(*ast.root);
  return d ? *d : -1;
}

// ---------------------------------------------------------------------------
// Evaluation (templated on the scalar, per shape)
// ---------------------------------------------------------------------------

namespace {

template <class S>
double value_of(const S& s) {
  if constexpr (std::is_same_v<S, double>)
    return s;
  else
    return s.val;
}

// Dual modes need strictly interior domain points so that first and second
// derivatives stay finite.
template <class S>
constexpr bool strict_domain() {
  return !std::is_same_v<S, double>;
}

template <class S, class VarFn>
S eval_node(const ExprNode& n, const VarFn& var) {
  switch (n.kind) {
    case NodeKind::Constant: return var.constant(n.constant);
    case NodeKind::Var: return var(n.space, n.index);
    case NodeKind::Neg: return -eval_node<S>(*n.a, var);
    case NodeKind::Add: return eval_node<S>(*n.a, var) + eval_node<S>(*n.b, var);
    case NodeKind::Sub: return eval_node<S>(*n.a, var) - eval_node<S>(*n.b, var);
    case NodeKind::Mul: return eval_node<S>(*n.a, var) * eval_node<S>(*n.b, var);
    case NodeKind::Div: {
      S a = eval_node<S>(*n.a, var);
      S b = eval_node<S>(*n.b, var);
      if (value_of(b) == 0.0) throw DomainError("division by zero", print(n));
      return a / b;
    }
    case NodeKind::Pow: {
      S a = eval_node<S>(*n.a, var);
      const double p = n.exponent;
      const double base = value_of(a);
      const bool integer_p = p == std::floor(p) && std::abs(p) < 1e9;
      if (!integer_p && (strict_domain<S>() ? base <= 0.0 : base < 0.0))
        throw DomainError("fractional power of a nonpositive base", print(n));
      if (integer_p && p < 0.0 && base == 0.0)
        throw DomainError("negative power of zero", print(n));
      if constexpr (std::is_same_v<S, double>)
        return std::pow(a, p);
      else
        return pow_const(a, p);
    }
    case NodeKind::Call: {
      using std::cos;
      using std::exp;
      using std::log;
      using std::sin;
      using std::sqrt;
      S a = eval_node<S>(*n.a, var);
      const double v = value_of(a);
      switch (n.func) {
        case FuncId::Exp:
          return exp(a);
        case FuncId::Log:
          if (v <= 0.0) throw DomainError("log of a nonpositive value", print(n));
          return log(a);
        case FuncId::Sqrt:
          if (strict_domain<S>() ? v <= 0.0 : v < 0.0)
            throw DomainError("sqrt of a negative value", print(n));
          return sqrt(a);
        case FuncId::Sin:
          return sin(a);
        case FuncId::Cos:
          return cos(a);
      }
      throw Error("unreachable");
    }
  }
  throw Error("unreachable");
}

void check_point(const ExprAst& ast, const EvalPoint& p) {
  if (p.x.size() != ast.n || p.y.size() != ast.m)
    throw DimensionError("evaluation point does not match expression dimensions (" +
                         std::to_string(ast.n) + "," + std::to_string(ast.m) + ")");
  if (!p.x.allFinite() || !p.y.allFinite())
    throw InvalidArgument("evaluation point has non-finite entries");
}

struct DoubleVars {
  const EvalPoint& p;
  double constant(double c) const { return c; }
  double operator()(VarSpace s, int i) const {
    return s == VarSpace::Upper ? p.x(i) : p.y(i);
  }
};

struct Dual2Vars {
  const EvalPoint& p;
  Eigen::Index k;
  int n;
  Dual2<double> constant(double c) const { return Dual2<double>::constant(c, k); }
  Dual2<double> operator()(VarSpace s, int i) const {
    const bool upper = s == VarSpace::Upper;
    return Dual2<double>::variable(upper ? p.x(i) : p.y(i), k, upper ? i : n + i);
  }
};

struct Dual1Vars {
  const EvalPoint& p;
  int seed;  // flat index into (x, y)
  int n;
  Dual1 constant(double c) const { return Dual1{c, 0.0}; }
  Dual1 operator()(VarSpace s, int i) const {
    const int flat = s == VarSpace::Upper ? i : n + i;
    return Dual1{s == VarSpace::Upper ? p.x(i) : p.y(i), flat == seed ? 1.0 : 0.0};
  }
};

}  // namespace

double evaluate(const ExprAst& ast, const EvalPoint& p) {
  check_point(ast, p);
  return eval_node<double>(*ast.root, DoubleVars{p});
}

Derivatives differentiate(const ExprAst& ast, const EvalPoint& p) {
  check_point(ast, p);
  const Eigen::Index k = ast.n + ast.m;
  Dual2<double> d = eval_node<Dual2<double>>(*ast.root, Dual2Vars{p, k, ast.n});
  Derivatives out;
  out.value = d.val;
  out.gradient = std::move(d.grad);
  out.hessian_asymmetry = (d.hess - d.hess.transpose()).cwiseAbs().maxCoeff();
  out.hessian = 0.5 * (d.hess + d.hess.transpose());
  return out;
}

double derivative_single(const ExprAst& ast, const EvalPoint& p, int k) {
  check_point(ast, p);
  if (k < 0 || k >= ast.n + ast.m) throw InvalidArgument("derivative index out of range");
  return eval_node<Dual1>(*ast.root, Dual1Vars{p, k, ast.n}).dot;
}

double fd_check(const ExprAst& ast, const EvalPoint& p, double h) {
  check_point(ast, p);
  if (h <= 0) throw InvalidArgument("fd_check step must be positive");
  const int k = ast.n + ast.m;
  const Derivatives ad = differentiate(ast, p);

  auto shifted = [&](int i, double step) {
    EvalPoint q = p;
    if (i < ast.n)
      q.x(i) += step;
    else
      q.y(i - ast.n) += step;
    return q;
  };

  double worst = 0.0;
  for (int i = 0; i < k; ++i) {
    const double fp = evaluate(ast, shifted(i, h));
    const double fm = evaluate(ast, shifted(i, -h));
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(ad.gradient(i) - fd) /
                                std::max(1.0, std::abs(ad.gradient(i))));
  }
  for (int i = 0; i < k; ++i) {
    const Vec gp = differentiate(ast, shifted(i, h)).gradient;
    const Vec gm = differentiate(ast, shifted(i, -h)).gradient;
    for (int j = 0; j < k; ++j) {
      const double fd = (gp(j) - gm(j)) / (2.0 * h);
      worst = std::max(worst, std::abs(ad.hessian(j, i) - fd) /
                                  std::max(1.0, std::abs(ad.hessian(j, i))));
    }
  }
  return worst;
}

}  // namespace bdfoa
