#include "bdfoa/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bdfoa {

bool BoxSet::contains(const Vec& y, double tol) const {
  if (y.size() != lower.size()) return false;
  for (int i = 0; i < y.size(); ++i)
    if (y(i) < lower(i) - tol || y(i) > upper(i) + tol) return false;
  return true;
}

Vec BoxSet::project(const Vec& y) const {
  return y.cwiseMax(lower).cwiseMin(upper);
}

BoxSet BoxSet::whole_space(int m) {
  BoxSet b;
  b.lower = Vec::Constant(m, -kInf);
  b.upper = Vec::Constant(m, kInf);
  return b;
}

BoxSet BoxSet::bounds(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) throw DimensionError("box bound lengths differ");
  for (int i = 0; i < lo.size(); ++i)
    if (!(lo(i) <= hi(i))) throw InvalidArgument("box has lower > upper");
  BoxSet b;
  b.lower = std::move(lo);
  b.upper = std::move(hi);
  return b;
}

// ---------------------------------------------------------------------------
// Config loading
// ---------------------------------------------------------------------------

namespace {

double bound_entry(const nlohmann::json& v, bool is_lower) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "-inf") return -kInf;
    if (s == "inf" || s == "+inf") return kInf;
    throw InvalidArgument("unknown bound sentinel '" + s + "'");
  }
  if (!v.is_number()) throw InvalidArgument(std::string("bound entry must be a number or ") +
                                            (is_lower ? "\"-inf\"" : "\"inf\""));
  return v.get<double>();
}

Vec json_vector(const nlohmann::json& arr) {
  Vec v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

BilevelProblem load_problem_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("problem config is not valid JSON: ") + e.what());
  }
  for (const char* key : {"name", "n", "m", "F", "f", "G", "Y_lower", "Y_upper"})
    if (!doc.contains(key)) throw InvalidArgument(std::string("config missing field '") + key + "'");

  BilevelProblem prob;
  prob.name = doc["name"].get<std::string>();
  prob.n = doc["n"].get<int>();
  prob.m = doc["m"].get<int>();
  if (prob.n < 1 || prob.m < 1) throw DimensionError("n and m must be positive");

  prob.F = parse(doc["F"].get<std::string>(), prob.n, prob.m);
  prob.f = parse(doc["f"].get<std::string>(), prob.n, prob.m);
  for (const auto& g : doc["G"]) prob.G.push_back(parse(g.get<std::string>(), prob.n, prob.m));

  const auto& lo = doc["Y_lower"];
  const auto& hi = doc["Y_upper"];
  if (static_cast<int>(lo.size()) != prob.m || static_cast<int>(hi.size()) != prob.m)
    throw DimensionError("Y bounds must have length m");
  Vec l(prob.m), u(prob.m);
  for (int i = 0; i < prob.m; ++i) {
    l(i) = bound_entry(lo[i], true);
    u(i) = bound_entry(hi[i], false);
  }
  prob.Y = BoxSet::bounds(l, u);

  if (doc.contains("point")) {
    EvalPoint p;
    p.x = json_vector(doc["point"]["x"]);
    p.y = json_vector(doc["point"]["y"]);
    if (p.x.size() != prob.n || p.y.size() != prob.m)
      throw DimensionError("config point does not match (n, m)");
    prob.point = p;
  }
  return prob;
}

BilevelProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open problem config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_problem_json(ss.str());
}

// ---------------------------------------------------------------------------
// y0 and built-ins
// ---------------------------------------------------------------------------

double solve_y0() {
  // g(y) = (1-y)e^{4y} - (1+y), strictly decreasing on [0.9, 1.0].
  auto g = [](double y) { return (1.0 - y) * std::exp(4.0 * y) - (1.0 + y); };
  double a = 0.9, b = 1.0;
  if (!(g(a) > 0.0) || !(g(b) < 0.0)) throw Error("y0 bracket lost a sign change");
  double mid = a;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;  // bracket collapsed to adjacent doubles
    const double gm = g(mid);
    if (gm == 0.0) break;
    (gm > 0.0 ? a : b) = mid;
  }
  return mid;
}

namespace {

BilevelProblem make_builtin(const std::string& name) {
  BilevelProblem prob;
  prob.name = name;
  if (name == "mirrlees") {
    prob.n = 1;
    prob.m = 1;
    prob.F = parse("(x1-2)^2 + (y1-1)^2", 1, 1);
    prob.f = parse("-x1*exp(-(y1+1)^2) - exp(-(y1-1)^2)", 1, 1);
    prob.Y = BoxSet::whole_space(1);
    return prob;
  }
  if (name == "modified-mirrlees") {
    const double y0 = solve_y0();
    prob.n = 2;
    prob.m = 1;
    prob.F = parse("(x1-0.5)^2 + (x1+x2)*(1+y1) - (1-y1)*exp(4*y1) + (y1-" +
                       format_exact(y0) + ")^3",
                   2, 1);
    prob.f = parse("-(x1+x2)*exp(-(y1+1)^2) - exp(-(y1-1)^2)", 2, 1);
    prob.Y = BoxSet::whole_space(1);
    return prob;
  }
  if (name == "example-xy-1") {
    prob.n = 1;
    prob.m = 1;
    prob.F = parse("0", 1, 1);
    prob.f = parse("(x1*y1-1)^2*(1+y1^2)", 1, 1);
    prob.Y = BoxSet::whole_space(1);
    return prob;
  }
  if (name == "example-xy3") {
    prob.n = 1;
    prob.m = 1;
    prob.F = parse("0", 1, 1);
    prob.f = parse("x1*y1^3 + y1^12", 1, 1);
    prob.Y = BoxSet::whole_space(1);
    return prob;
  }
  if (name == "toy-convex") {
    prob.n = 1;
    prob.m = 1;
    prob.F = parse("(x1-1)^2 + (y1-1)^2", 1, 1);
    prob.f = parse("(y1-x1)^2", 1, 1);
    prob.Y = BoxSet::whole_space(1);
    return prob;
  }
  if (name == "principal-agent-2") {
    PrincipalAgentSpec spec;
    spec.outputs = Vec(2);
    spec.outputs << 0.0, 10.0;
    spec.prob.push_back(parse("1 - y1", 0, 1));
    spec.prob.push_back(parse("y1", 0, 1));
    spec.agent_utility = parse("sqrt(x1)", 1, 0);
    spec.principal_utility = parse("x1", 1, 0);
    spec.cost = parse("y1^2", 0, 1);
    spec.reservation = 0.1;
    spec.wage_box = BoxSet::bounds(Vec::Constant(2, 0.01), Vec::Constant(2, 8.0));
    spec.action_box = BoxSet::bounds(Vec::Constant(1, 0.05), Vec::Constant(1, 0.95));
    BilevelProblem pa = build_principal_agent(spec);
    pa.name = name;
    return pa;
  }
  throw InvalidArgument("unknown built-in problem '" + name + "'");
}

}  // namespace

BilevelProblem builtin(const std::string& name) { return make_builtin(name); }

std::vector<std::string> builtin_names() {
  return {"mirrlees", "modified-mirrlees", "example-xy-1",
          "example-xy3", "toy-convex", "principal-agent-2"};
}

// ---------------------------------------------------------------------------
// Principal-agent builder
// ---------------------------------------------------------------------------

BilevelProblem build_principal_agent(const PrincipalAgentSpec& spec) {
  const int ns = static_cast<int>(spec.outputs.size());
  if (static_cast<int>(spec.prob.size()) != ns)
    throw DimensionError("need one probability expression per output");
  const int m = spec.action_box.dim();

  // Simplex validation on a sampled action grid.
  {
    const int res = 101;
    Vec lo = spec.action_box.lower, hi = spec.action_box.upper;
    if (!spec.action_box.bounded()) throw InvalidArgument("action box must be bounded");
    double worst_sum_err = 0.0, worst_neg = 0.0;
    Vec worst_y = lo;
    std::vector<int> idx(m, 0);
    const long total = static_cast<long>(std::pow(res, m));
    for (long c = 0; c < total; ++c) {
      long rem = c;
      Vec y(m);
      for (int i = 0; i < m; ++i) {
        const int k = static_cast<int>(rem % res);
        rem /= res;
        y(i) = lo(i) + (hi(i) - lo(i)) * k / (res - 1);
      }
      EvalPoint p{Vec(0), y};
      double sum = 0.0;
      double neg = 0.0;
      for (const auto& P : spec.prob) {
        const double v = evaluate(P, p);
        sum += v;
        neg = std::min(neg, v);
      }
      if (std::abs(sum - 1.0) > worst_sum_err || -neg > worst_neg) worst_y = y;
      worst_sum_err = std::max(worst_sum_err, std::abs(sum - 1.0));
      worst_neg = std::max(worst_neg, -neg);
    }
    if (worst_sum_err > 1e-8 || worst_neg > 1e-10) {
      std::string msg = "probability simplex violation at y = [";
      for (int i = 0; i < m; ++i) msg += (i ? ", " : "") + format_g12(worst_y(i));
      msg += "]: |sum-1| = " + format_g12(worst_sum_err) +
             ", max negativity = " + format_g12(worst_neg);
      throw InvalidArgument(msg);
    }
  }

  // f(x,y) = -sum_j u(x_j) P(s_j, y) + c(y)
  // F(x,y) = -sum_j v(pi_j - x_j) P(s_j, y)
  auto lift_prob = [&](int j) {
    return substitute(spec.prob[j], {}, {}, ns, m).root;
  };
  NodeRef f_sum, F_sum;
  for (int j = 0; j < ns; ++j) {
    std::vector<NodeRef> wage_sub{make_var(VarSpace::Upper, j)};
    NodeRef uj = substitute(spec.agent_utility, wage_sub, {}, ns, m).root;
    std::vector<NodeRef> net_sub{make_binary(NodeKind::Sub, make_constant(spec.outputs(j)),
                                             make_var(VarSpace::Upper, j))};
    NodeRef vj = substitute(spec.principal_utility, net_sub, {}, ns, m).root;
    NodeRef pj = lift_prob(j);
    NodeRef f_term = make_binary(NodeKind::Mul, uj, pj);
    NodeRef F_term = make_binary(NodeKind::Mul, vj, pj);
    f_sum = f_sum ? make_binary(NodeKind::Add, f_sum, f_term) : f_term;
    F_sum = F_sum ? make_binary(NodeKind::Add, F_sum, F_term) : F_term;
  }
  NodeRef cost = substitute(spec.cost, {}, {}, ns, m).root;

  BilevelProblem prob;
  prob.n = ns;
  prob.m = m;
  prob.name = "principal-agent";
  prob.f = ExprAst{
      make_binary(NodeKind::Add, make_unary(NodeKind::Neg, f_sum), cost), ns, m};
  prob.F = ExprAst{make_unary(NodeKind::Neg, F_sum), ns, m};
  // IR: f(x,y) <= -U  <=>  f(x,y) + U <= 0
  prob.G.push_back(ExprAst{
      make_binary(NodeKind::Add, prob.f.root, make_constant(spec.reservation)), ns, m});
  prob.Y = spec.action_box;
  return prob;
}

EvalBundle eval_bundle(const BilevelProblem& prob, const EvalPoint& p) {
  EvalBundle b;
  b.F = differentiate(prob.F, p);
  b.f = differentiate(prob.f, p);
  b.G.reserve(prob.G.size());
  for (const auto& g : prob.G) b.G.push_back(differentiate(g, p));
  return b;
}

EvalPoint builtin_reference_point(const BilevelProblem& prob) {
  const double y0 = solve_y0();
  EvalPoint p;
  if (prob.name == "mirrlees") {
    p.x = Vec::Constant(1, 1.0);
    p.y = Vec::Constant(1, y0);
  } else if (prob.name == "modified-mirrlees") {
    p.x = Vec::Constant(2, 0.5);
    p.y = Vec::Constant(1, y0);
  } else if (prob.name == "toy-convex") {
    p.x = Vec::Constant(1, 1.0);
    p.y = Vec::Constant(1, 1.0);
  } else if (prob.name == "example-xy-1") {
    p.x = Vec::Constant(1, 2.0);
    p.y = Vec::Constant(1, 0.5);
  } else if (prob.name == "example-xy3") {
    p.x = Vec::Constant(1, 4.0);
    p.y = Vec::Constant(1, -1.0);
  } else if (prob.point) {
    return *prob.point;
  } else {
    throw InvalidArgument("no reference point known for problem '" + prob.name + "'");
  }
  return p;
}

}  // namespace bdfoa
