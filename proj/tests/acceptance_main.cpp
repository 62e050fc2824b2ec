// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion pins its tolerances in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bdfoa/cli.hpp"
#include "bdfoa/regularity.hpp"
#include "oracles.hpp"

using namespace bdfoa;
using bdfoa::testing::cone_equal;
using bdfoa::testing::sampled_directional_normal;
using bdfoa::testing::sampled_directional_normal_box;
using bdfoa::testing::sampled_limiting_normal;
using bdfoa::testing::union_equal_sampled;
using bdfoa::testing::union_subset_sampled;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<Criterion> g_results;

void run_criterion(int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
  Criterion c;
  c.id = id;
  c.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto [pass, detail] = body();
    c.pass = pass;
    c.detail = detail;
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("exception: ") + e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  c.seconds = std::chrono::duration<double>(t1 - t0).count();
  g_results.push_back(c);
  std::printf("[%s] criterion %d (%s): %s  [%.2fs]\n", c.pass ? "PASS" : "FAIL", c.id,
              c.name.c_str(), c.detail.c_str(), c.seconds);
  std::fflush(stdout);
}

Vec vec1(double a) { return Vec::Constant(1, a); }

EvalPoint mirrlees_point() {
  EvalPoint p;
  p.x = vec1(1.0);
  p.y = vec1(solve_y0());
  return p;
}

EvalPoint modified_point() {
  EvalPoint p;
  p.x = Vec(2);
  p.x << 0.5, 0.5;
  p.y = vec1(solve_y0());
  return p;
}

std::pair<bool, std::string> criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double y0 = solve_y0();
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  const double residual = std::abs((1.0 - y0) * std::exp(4.0 * y0) / (1.0 + y0) - 1.0);
  const double dist = std::abs(y0 - 0.957);
  const bool res_ok = residual <= 1e-10;
  const bool dist_ok = dist <= 5e-4;
  const bool time_ok = ms < 1.0;
  std::string detail = "y0 = " + format_g12(y0) + ", residual = " + format_g12(residual) +
                       " (<= 1e-10: " + (res_ok ? "yes" : "NO") + "), |y0 - 0.957| = " +
                       format_g12(dist) + " (<= 5e-4: " + (dist_ok ? "yes" : "NO") +
                       "), runtime " + format_g12(ms) + " ms";
  if (!dist_ok)
    detail += "; note: the exact root of the paper's equation is 0.95750402407726874, "
              "which is 5.04e-4 from the paper's truncated report 0.957 - the two "
              "clauses of this criterion are jointly unattainable (see decisions ledger)";
  return {res_ok && dist_ok && time_ok, detail};
}

std::pair<bool, std::string> criterion2() {
  const RunResult r = run({"certify", "--builtin", "modified-mirrlees"});
  if (r.exit_code != 0 || !r.report.summary.at("certified").get<bool>())
    return {false, "certify exited " + std::to_string(r.exit_code)};
  const double nu = r.report.body.at("certificate").at("nu").at(0).get<double>();
  const double y0 = solve_y0();
  const double expected = 0.5 * std::exp((1 + y0) * (1 + y0));
  const bool rel_ok = std::abs(nu - expected) <= 1e-6 * nu;
  const bool paper_ok = std::abs(nu - 23.1) <= 0.1;

  // recompute the stationarity rows from scratch
  const BilevelProblem prob = builtin("modified-mirrlees");
  const EvalPoint p = modified_point();
  const Derivatives dF = differentiate(prob.F, p);
  const Derivatives df = differentiate(prob.f, p);
  Vec residual = dF.gradient;
  residual.head(2) -= df.hessian.block(2, 0, 1, 2).transpose() * vec1(nu);
  residual.tail(1) -= df.hessian.block(2, 2, 1, 1) * vec1(nu);
  const double row_res = residual.cwiseAbs().maxCoeff();
  const double y_row = std::abs(dF.gradient(2) - df.hessian(2, 2) * nu);
  const bool rows_ok = row_res <= 1e-6 && y_row <= 1e-6;

  return {rel_ok && paper_ok && rows_ok,
          "nu = " + format_g12(nu) + " vs 0.5 e^{(1+y0)^2} = " + format_g12(expected) +
              ", row residual = " + format_g12(row_res) +
              ", y-row identity = " + format_g12(y_row)};
}

std::pair<bool, std::string> criterion3() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"mirrlees", "modified-mirrlees"}) {
    const BilevelProblem prob = builtin(name);
    const EvalPoint p =
        std::string(name) == "mirrlees" ? mirrlees_point() : modified_point();
    const FoaFailureReport foa = detect_classical_foa_failure(prob, p, 0.05);
    const bool foa_ok =
        foa.failure_found && foa.margin > 1e-6 && foa.witness_residual <= 1e-9;
    NbhdSpec nbhd;
    nbhd.x_radius = 0.05;
    nbhd.y_radius = 0.4;
    nbhd.min_samples = 10000;
    const LocalMinReport lm = verify_bilevel_local_min(prob, p, nbhd);
    const bool lm_ok = lm.verdict && lm.samples >= 10000;
    ok = ok && foa_ok && lm_ok;
    detail += std::string(name) + ": FOA margin " + format_g12(foa.margin) + " (residual " +
              format_g12(foa.witness_residual) + "), local-min " +
              (lm.verdict ? "holds" : "VIOLATED") + " over " + std::to_string(lm.samples) +
              " samples; ";
  }
  return {ok, detail};
}

std::pair<bool, std::string> criterion4() {
  const BilevelProblem prob = builtin("mirrlees");
  const EvalPoint p = mirrlees_point();
  const auto sched = SamplingSchedule::covering(0.2997, 640);
  const EquivalenceReport down =
      verify_equivalence(prob, p, Direction(vec1(-1.0)), 0.3, 0.4, 0.5, sched);
  const EquivalenceReport up =
      verify_equivalence(prob, p, Direction(vec1(1.0)), 0.3, 0.4, 0.5, sched);
  const bool ok =
      down.verdict && down.sample_count >= 640 && !up.verdict && up.worst_x.has_value();
  return {ok, "u=-1: " + std::string(down.verdict ? "TRUE" : "false") + " over " +
                  std::to_string(down.sample_count) + " samples; u=+1: " +
                  (up.verdict ? "true" : "FALSE") + " with witness x = " +
                  (up.worst_x ? format_g12((*up.worst_x)(0)) : std::string("none"))};
}

std::pair<bool, std::string> criterion5() {
  const double y0 = solve_y0();
  const double expected_normal =
      -std::exp(-(1 - y0) * (1 - y0)) + std::exp(-(1 + y0) * (1 + y0));

  const DirectionCone mir = admissible_directions(builtin("mirrlees"), vec1(1.0), vec1(y0));
  bool ok = mir.normals.size() == 1 &&
            std::abs(mir.normals[0](0) - expected_normal) <= 1e-8 &&
            mir.contains(vec1(-1.0)) && !mir.contains(vec1(1.0));

  Vec x_bar(2);
  x_bar << 0.5, 0.5;
  const DirectionCone mm =
      admissible_directions(builtin("modified-mirrlees"), x_bar, vec1(y0));
  Vec in(2), out(2);
  in << -0.7, 0.2;
  out << 0.7, -0.2;
  ok = ok && mm.normals.size() == 1 &&
       std::abs(mm.normals[0](0) - expected_normal) <= 1e-8 &&
       std::abs(mm.normals[0](1) - expected_normal) <= 1e-8 && mm.contains(in) &&
       !mm.contains(out);
  return {ok, "mirrlees cone {u < 0}, modified cone {u1 + u2 < 0}, normals within 1e-8 of "
              "the AD gradient difference " +
                  format_g12(expected_normal)};
}

std::pair<bool, std::string> criterion6() {
  const BilevelProblem xy1 = builtin("example-xy-1");
  bool ok = true;
  double worst = 0.0;
  for (const double x : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
    const SolutionSample s = solve_lower(xy1, vec1(x));
    ok = ok && s.minimizers.size() == 1;
    worst = std::max(worst, std::abs(s.minimizers.front()(0) - 1.0 / x));
  }
  const SolutionSample at0 = solve_lower(xy1, vec1(0.0));
  ok = ok && at0.minimizers.size() == 1 && std::abs(at0.minimizers.front()(0)) <= 1e-6;

  const BilevelProblem xy3 = builtin("example-xy3");
  for (int k = 0; k <= 20; ++k) {
    const double x = -2.0 + 4.0 * k / 20.0;
    const double closed = -std::copysign(std::pow(std::abs(x) / 4.0, 1.0 / 9.0), x);
    const SolutionSample s = solve_lower(xy3, vec1(x));
    ok = ok && s.minimizers.size() == 1;
    worst = std::max(worst, std::abs(s.minimizers.front()(0) - closed));
  }
  ok = ok && worst <= 1e-6;
  return {ok, "max |oracle - closed form| = " + format_g12(worst) + " (<= 1e-6), S(0) = {0}"};
}

std::pair<bool, std::string> criterion7() {
  std::mt19937 rng(20260810);
  std::uniform_real_distribution<double> lo(-3.0, 0.0), width(0.4, 2.5), comp(-1.0, 1.0);
  bool ok = true;
  std::string why;

  // five limiting cases on 20 random intervals
  for (int t = 0; t < 20 && ok; ++t) {
    const double a = lo(rng), b = a + width(rng);
    const double cases[5][2] = {
        {a, -1.1}, {a, 0.0}, {0.5 * (a + b), 0.0}, {b, 0.0}, {b, 0.9}};
    for (const auto& c : cases) {
      if (!union_equal_sampled(limiting_graph_normal_interval(a, b, c[0], c[1]),
                               sampled_limiting_normal(a, b, c[0], c[1]), rng)) {
        ok = false;
        why = "limiting case mismatch";
        break;
      }
    }
  }

  // >= 40 directional cases against the oracle
  int dir_cases = 0;
  for (int t = 0; t < 6 && ok; ++t) {
    const double a = lo(rng), b = a + width(rng);
    const double table[8][4] = {{a, 0.0, 1.0, 0.0},
                                {a, 0.0, 0.0, -1.0},
                                {a, 0.0, 1.0, 1.0},
                                {a, -0.6, 0.0, 1.0},
                                {0.5 * (a + b), 0.0, -1.0, 0.0},
                                {0.5 * (a + b), 0.0, 0.0, 1.0},
                                {b, 0.0, -1.0, 0.0},
                                {b, 1.3, 0.0, -1.0}};
    for (const auto& c : table) {
      if (!union_equal_sampled(
              directional_graph_normal_interval(a, b, c[0], c[1], {c[2], c[3]}),
              sampled_directional_normal(a, b, c[0], c[1], {c[2], c[3]}), rng)) {
        ok = false;
        why = "directional case mismatch";
        break;
      }
      ++dir_cases;
    }
  }
  ok = ok && dir_cases >= 40;

  // directional subset of limiting + N(.;0) = N(.) on 200 box-graph instances
  for (int t = 0; t < 200 && ok; ++t) {
    const double a = lo(rng), b = a + width(rng);
    const int site = t % 5;
    double y = a, xi = 0.0;
    if (site == 0) xi = -1.0;
    if (site == 2) y = 0.5 * (a + b);
    if (site == 3) y = b;
    if (site == 4) {
      y = b;
      xi = 1.0;
    }
    const Eigen::Vector2d w(comp(rng), comp(rng));
    const ConeUnion dir = directional_graph_normal_interval(a, b, y, xi, w);
    const ConeUnion lim = limiting_graph_normal_interval(a, b, y, xi);
    if (!union_subset_sampled(dir, lim, rng) ||
        !union_equal_sampled(directional_graph_normal_interval(a, b, y, xi, {0, 0}), lim,
                             rng)) {
      ok = false;
      why = "directional/limiting relation broken";
    }
  }

  // convex box formula on 200 instances
  std::uniform_int_distribution<int> dims(1, 3), where(0, 2);
  for (int t = 0; t < 200 && ok; ++t) {
    const int m = dims(rng);
    Vec l(m), h(m), y(m);
    for (int i = 0; i < m; ++i) {
      l(i) = lo(rng);
      h(i) = l(i) + width(rng);
      const int pos = where(rng);
      y(i) = pos == 0 ? l(i) : pos == 1 ? h(i) : 0.5 * (l(i) + h(i));
    }
    const BoxSet Y = BoxSet::bounds(l, h);
    const SignedCoordinateCone tangent = tangent_cone_box(Y, y);
    Vec d = Vec::NullaryExpr(m, [&](Eigen::Index) { return comp(rng); });
    for (int i = 0; i < m; ++i) {
      if (tangent.tags[i] == CoordTag::Zero) d(i) = 0.0;
      if (tangent.tags[i] == CoordTag::NonNeg) d(i) = std::abs(d(i));
      if (tangent.tags[i] == CoordTag::NonPos) d(i) = -std::abs(d(i));
    }
    if (!cone_equal(directional_normal_convex_box(Y, y, d),
                    sampled_directional_normal_box(Y, y, d))) {
      ok = false;
      why = "convex directional formula mismatch";
    }
  }

  // polar involution on 100 random cones
  std::uniform_int_distribution<int> pdims(1, 4);
  for (int t = 0; t < 100 && ok; ++t) {
    const int dd = pdims(rng);
    std::uniform_int_distribution<int> ngen(0, dd + 2);
    std::vector<Vec> gens;
    const int g = ngen(rng);
    for (int i = 0; i < g; ++i)
      gens.push_back(Vec::NullaryExpr(dd, [&](Eigen::Index) { return comp(rng); }));
    const PolyConeRep c = PolyConeRep::from_generators(dd, gens);
    if (!cone_equal(polar(polar(c)), c)) {
      ok = false;
      why = "polar involution broken";
    }
  }
  return {ok,
          ok ? "all cone-calculus properties verified against the sampling oracles" : why};
}

std::pair<bool, std::string> criterion8() {
  const CqEvidence mm = check_nnamcq(builtin("modified-mirrlees"), modified_point());
  EvalPoint toy_p;
  toy_p.x = vec1(1.0);
  toy_p.y = vec1(1.0);
  const CqEvidence toy = check_nnamcq(builtin("toy-convex"), toy_p);

  BilevelProblem opposing;
  opposing.n = 1;
  opposing.m = 1;
  opposing.name = "opposing";
  opposing.F = parse("x1 + y1^2", 1, 1);
  opposing.f = parse("(y1-x1)^2", 1, 1);
  opposing.G.push_back(parse("x1", 1, 1));
  opposing.G.push_back(parse("-x1", 1, 1));
  opposing.Y = BoxSet::whole_space(1);
  EvalPoint p0;
  p0.x = vec1(0.0);
  p0.y = vec1(0.0);
  const CqEvidence bad = check_nnamcq(opposing, p0);

  bool witness_ok = false;
  if (bad.violating) {
    const Vec z = *bad.violating;
    Vec residual = constraint_jacobian(opposing, p0).topRows(2).transpose() * z.head(2);
    for (int i = 0; i < 2; ++i)
      residual += z(2 + i) * differentiate(opposing.G[i], p0).gradient;
    witness_ok = std::abs(z.norm() - 1.0) <= 1e-9 &&
                 residual.cwiseAbs().maxCoeff() <= 1e-8 && z.tail(2).minCoeff() >= -1e-12;
  }
  const bool ok = mm.verdict && toy.verdict && !bad.verdict && witness_ok;
  return {ok, std::string("NNAMCQ holds at modified-mirrlees: ") +
                  (mm.verdict ? "yes" : "NO") + ", toy-convex: " +
                  (toy.verdict ? "yes" : "NO") +
                  ", opposing-gradient instance fails with verified witness: " +
                  (witness_ok ? "yes" : "NO")};
}

std::pair<bool, std::string> criterion9() {
  const BilevelProblem prob = builtin("mirrlees");
  const EvalPoint p = mirrlees_point();
  const DirectionCone cone = admissible_directions(prob, p.x, p.y);
  int scanned = 0;
  for (int k = 0; k < 21; ++k) {
    const Vec u = vec1(-(0.05 + (2.0 - 0.05) * k / 20.0));
    if (!cone.contains(u)) continue;
    ++scanned;
    if (find_critical_direction(prob, p, u))
      return {false, "unexpected critical direction at u = " + format_g12(u(0))};
  }
  const RunResult r = run({"certify", "--builtin", "mirrlees", "--point", "1", "0.957"});
  const bool ok = scanned == 21 && r.exit_code == 2;
  return {ok, "no critical direction over a " + std::to_string(scanned) +
                  "-point scan of {u < 0}; certify exit code " + std::to_string(r.exit_code)};
}

std::pair<bool, std::string> criterion10() {
  std::mt19937 rng(424242);
  double worst = 0.0;
  for (const auto& name : builtin_names()) {
    const BilevelProblem prob = builtin(name);
    const bool pa = name == "principal-agent-2";
    std::uniform_real_distribution<double> ux(pa ? 0.5 : -1.5, pa ? 4.0 : 1.5);
    std::uniform_real_distribution<double> uy(pa ? 0.1 : -1.5, pa ? 0.9 : 1.5);
    for (int t = 0; t < 100; ++t) {
      EvalPoint p;
      p.x = Vec::NullaryExpr(prob.n, [&](Eigen::Index) { return ux(rng); });
      p.y = Vec::NullaryExpr(prob.m, [&](Eigen::Index) { return uy(rng); });
      worst = std::max(worst, fd_check(prob.F, p));
      worst = std::max(worst, fd_check(prob.f, p));
      for (const auto& g : prob.G) worst = std::max(worst, fd_check(g, p));
    }
  }
  return {worst <= 1e-6,
          "max AD-vs-FD relative error over 100 random points per builtin = " +
              format_g12(worst)};
}

}  // namespace

int main() {
  std::printf("bdfoa acceptance suite\n");
  run_criterion(1, "y0 reproduction", criterion1);
  run_criterion(2, "multiplier reproduction", criterion2);
  run_criterion(3, "FOA-failure reproduction", criterion3);
  run_criterion(4, "directional equivalence", criterion4);
  run_criterion(5, "admissible directions", criterion5);
  run_criterion(6, "closed-form oracle equivalence", criterion6);
  run_criterion(7, "cone-calculus property suite", criterion7);
  run_criterion(8, "CQ checks", criterion8);
  run_criterion(9, "no-critical-direction finding", criterion9);
  run_criterion(10, "differentiation", criterion10);

  int failed = 0;
  for (const auto& c : g_results) failed += c.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failed,
              g_results.size());
  if (failed == 1 && !g_results[0].pass)
    std::printf("note: the single failure is criterion 1's proximity clause, which is "
                "unattainable as specified; see the printed detail\n");
  return failed;
}
