#include "bdfoa/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

namespace bdfoa {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNegative = 2;

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

EvalPoint split_point(const BilevelProblem& prob, const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != prob.n + prob.m)
    throw InvalidArgument("--point needs n+m = " + std::to_string(prob.n + prob.m) +
                          " coordinates");
  EvalPoint p;
  p.x = Vec(prob.n);
  p.y = Vec(prob.m);
  for (int i = 0; i < prob.n; ++i) p.x(i) = flat[i];
  for (int i = 0; i < prob.m; ++i) p.y(i) = flat[prob.n + i];
  return p;
}

/// Moves a near-stationary candidate onto the stationary set (snap radius
/// 1e-2); exact points pass through.
EvalPoint snap_to_stationary(const BilevelProblem& prob, const EvalPoint& p, bool* snapped) {
  if (snapped) *snapped = false;
  if (box_stationarity_residual(prob, p.x, p.y) <= 1e-9) return p;
  const StationarySample s =
      stationary_set(prob, p.x, GridSpec::around(p.y, 2e-2, 801), p.y, 2e-2);
  if (s.stationary_points.empty())
    throw InvalidArgument("point is not lower-level stationary (and no stationary point "
                          "within snap radius 1e-2)");
  EvalPoint out = p;
  double best = kInf;
  for (const auto& sp : s.stationary_points) {
    const double d = (sp.y - p.y).norm();
    if (d < best) {
      best = d;
      out.y = sp.y;
    }
  }
  if (snapped) *snapped = true;
  return out;
}

std::vector<Vec> scan_directions(const DirectionCone& cone, int n, int count) {
  std::vector<Vec> dirs;
  if (n == 1) {
    const double sign = cone.full_space || !cone.witness_direction
                            ? 1.0
                            : ((*cone.witness_direction)(0) > 0 ? 1.0 : -1.0);
    for (int k = 0; k < count; ++k)
      dirs.push_back(Vec::Constant(1, sign * (0.05 + (2.0 - 0.05) * k / (count - 1))));
    if (cone.full_space)
      for (int k = 0; k < count; ++k) dirs.push_back(-dirs[k]);
    return dirs;
  }
  std::vector<Vec> sphere;
  if (n == 2) {
    for (int k = 0; k < 128; ++k) {
      const double a = 2.0 * M_PI * k / 128;
      Vec u(2);
      u << std::cos(a), std::sin(a);
      sphere.push_back(u);
    }
  } else if (n == 3) {
    for (int k = 0; k < 256; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / 256;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = k * 2.399963229728653;
      Vec u(3);
      u << r * std::cos(a), r * std::sin(a), z;
      sphere.push_back(u);
    }
  } else {
    throw InvalidArgument("direction scan limited to n <= 3");
  }
  for (const Vec& u : sphere) {
    if (cone.full_space || cone.contains(u)) dirs.push_back(u);
    if (static_cast<int>(dirs.size()) == count) break;
  }
  if (dirs.empty() && cone.witness_direction) dirs.push_back(*cone.witness_direction);
  return dirs;
}

bool is_interior_point(const BilevelProblem& prob, const EvalPoint& p) {
  for (int i = 0; i < prob.m; ++i) {
    if (std::isfinite(prob.Y.lower(i)) && p.y(i) - prob.Y.lower(i) <= 1e-9) return false;
    if (std::isfinite(prob.Y.upper(i)) && prob.Y.upper(i) - p.y(i) <= 1e-9) return false;
  }
  return true;
}

}  // namespace

CertifyOutcome certify_pipeline(const BilevelProblem& prob, const EvalPoint& point,
                                const std::vector<Vec>& user_directions, bool assume_cq,
                                const GridSpec& grid) {
  CertifyOutcome out;
  bool snapped = false;
  out.analyzed_point = snap_to_stationary(prob, point, &snapped);
  const EvalPoint& p = out.analyzed_point;

  try {
    out.admissible = admissible_directions(prob, p.x, p.y, grid);
  } catch (const Error& e) {
    out.admissible.empty = true;
    out.reason = std::string("admissible-direction analysis unavailable: ") + e.what();
  }

  std::vector<Vec> candidates = user_directions;
  if (candidates.empty()) candidates = scan_directions(out.admissible, prob.n, 21);

  std::string cq_note;
  for (const Vec& u : candidates) {
    std::optional<Vec> v;
    try {
      v = find_critical_direction(prob, p, u);
    } catch (const Error&) {
      continue;  // singular Hessian in the interior formula
    }
    if (!v) continue;
    out.critical_direction_found = true;

    CertifyResult res;
    if (is_interior_point(prob, p)) {
      try {
        res = certify_interior(prob, p, u, *v);
      } catch (const Error& e) {
        cq_note = e.what();
        continue;
      }
    } else {
      CqEvidence cq = check_foscms(prob, p, u, *v);
      if (!cq.verdict) cq = check_nnamcq(prob, p);
      if (!cq.verdict) cq = affine_polyhedral_evidence(prob);
      if (!cq.verdict) {
        if (!assume_cq) {
          cq_note = "no constraint qualification certified at this direction";
          continue;
        }
        cq = assumed_cq("--assume-cq");
      }
      res = certify_directional_kkt(prob, p, u, *v, cq);
    }
    if (res.found) {
      out.certified = true;
      out.certificate = res.certificate;
      return out;
    }
  }
  if (!out.critical_direction_found)
    out.reason = "no critical direction: every scanned admissible direction fails "
                 "grad F (u,v) = 0";
  else if (out.reason.empty())
    out.reason = cq_note.empty() ? "no multiplier certificate at the scanned directions"
                                 : cq_note;
  return out;
}

// ---------------------------------------------------------------------------
// Reproduction pipelines
// ---------------------------------------------------------------------------

namespace {

Json closed_form_table(const BilevelProblem& prob, const std::vector<double>& xs,
                       double (*closed)(double)) {
  Json rows = Json::array();
  for (const double x : xs) {
    const SolutionSample s = solve_lower(prob, Vec::Constant(1, x));
    Json row;
    row["x"] = x;
    row["oracle"] = to_json(s.minimizers.front());
    row["closed_form"] = closed(x);
    row["error"] = std::abs(s.minimizers.front()(0) - closed(x));
    row["boundary_flag"] = s.boundary_flag;
    rows.push_back(row);
  }
  return rows;
}

Json reproduce_mirrlees(const std::string&) {
  const BilevelProblem prob = builtin("mirrlees");
  const double y0 = solve_y0();
  EvalPoint p;
  p.x = Vec::Constant(1, 1.0);
  p.y = Vec::Constant(1, y0);

  Json body;
  body["y0"] = y0;
  body["solution_set"] = to_json(solve_lower(prob, p.x));
  body["admissible_directions"] = to_json(admissible_directions(prob, p.x, p.y));
  body["localization"] = to_json(check_localization(prob, p));

  const auto sched = SamplingSchedule::dyadic(14);
  body["inner_semicontinuity"] = Json{
      {"u_minus", to_json(check_inner_semicontinuity_empirical(
                      prob, p.x, p.y, Direction(Vec::Constant(1, -1.0)), sched))},
      {"u_plus", to_json(check_inner_semicontinuity_empirical(
                     prob, p.x, p.y, Direction(Vec::Constant(1, 1.0)), sched))}};

  const auto esched = SamplingSchedule::covering(0.3, 40);
  body["equivalence"] = Json{
      {"u_minus", to_json(verify_equivalence(prob, p, Direction(Vec::Constant(1, -1.0)),
                                             0.3, 0.4, 0.5, esched))},
      {"u_plus", to_json(verify_equivalence(prob, p, Direction(Vec::Constant(1, 1.0)), 0.3,
                                            0.4, 0.5, esched))}};

  body["foa_failure"] = to_json(detect_classical_foa_failure(prob, p, 0.1));
  NbhdSpec nbhd;
  nbhd.min_samples = 2000;
  body["bilevel_local_min"] = to_json(verify_bilevel_local_min(prob, p, nbhd));

  const CertifyOutcome cert = certify_pipeline(prob, p, {}, false);
  body["certify"] = Json{{"certified", cert.certified},
                         {"critical_direction_found", cert.critical_direction_found},
                         {"reason", cert.reason}};
  return body;
}

Json reproduce_modified(const std::string&) {
  const BilevelProblem prob = builtin("modified-mirrlees");
  const double y0 = solve_y0();
  EvalPoint p;
  p.x = Vec(2);
  p.x << 0.5, 0.5;
  p.y = Vec::Constant(1, y0);

  Json body;
  body["y0"] = y0;
  body["F_at_point"] = evaluate(prob.F, p);
  body["admissible_directions"] = to_json(admissible_directions(prob, p.x, p.y));
  body["localization"] = to_json(check_localization(prob, p));

  Vec u(2);
  u << -1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  const auto esched = SamplingSchedule::covering(0.3, 40);
  body["equivalence"] =
      to_json(verify_equivalence(prob, p, Direction(u), 0.3, 0.4, 0.5, esched));

  body["foa_failure"] = to_json(detect_classical_foa_failure(prob, p, 0.05));
  NbhdSpec nbhd;
  nbhd.min_samples = 2000;
  body["bilevel_local_min"] = to_json(verify_bilevel_local_min(prob, p, nbhd));

  const CertifyOutcome cert = certify_pipeline(prob, p, {}, false);
  Json cj;
  cj["certified"] = cert.certified;
  if (cert.certified) cj["certificate"] = to_json(cert.certificate);
  body["certify"] = cj;
  return body;
}

// Stationary branch ordinate in a y-window (unique there for x near 1).
double branch_y(const BilevelProblem& prob, double x, double lo, double hi) {
  GridSpec g;
  g.window_lo = Vec::Constant(1, lo);
  g.window_hi = Vec::Constant(1, hi);
  g.resolution = 2001;
  const StationarySample s = stationary_set(prob, Vec::Constant(1, x), g);
  if (s.stationary_points.empty()) throw Error("stationary branch lost");
  return s.stationary_points.front().y(0);
}

Json reproduce_figure1(const std::string& out_dir) {
  const BilevelProblem prob = builtin("mirrlees");
  Json body;

  // S_FO surface: x = (1-y) e^{4y} / (1+y) over y in [-2, 2]
  std::vector<std::vector<double>> sfo_rows;
  const int count = 801;
  for (int k = 0; k < count; ++k) {
    const double y = -2.0 + 4.0 * k / (count - 1);
    if (std::abs(1.0 + y) < 1e-9) continue;  // pole of the surface
    const double x = (1.0 - y) * std::exp(4.0 * y) / (1.0 + y);
    sfo_rows.push_back({y, x});
  }
  const std::string sfo_path = out_dir + "/figure1_sfo.csv";
  emit_csv({"y", "x"}, sfo_rows, sfo_path);

  // solution curve with the jump at x = 1
  std::vector<std::vector<double>> sol_rows;
  for (int k = 0; k <= 590; ++k) {
    const double x = 0.05 + (3.0 - 0.05) * k / 590;
    const SolutionSample s = solve_lower(prob, Vec::Constant(1, x));
    for (const Vec& y : s.minimizers) sol_rows.push_back({x, y(0)});
  }
  const std::string sol_path = out_dir + "/figure1_solution.csv";
  emit_csv({"x", "y"}, sol_rows, sol_path);

  // jump locator: equate the two branch values f(x, y+(x)) = f(x, y-(x))
  auto branch_gap = [&](double x) {
    const double yp = branch_y(prob, x, 0.5, 1.5);
    const double ym = branch_y(prob, x, -1.5, -0.5);
    const Vec xx = Vec::Constant(1, x);
    return evaluate(prob.f, EvalPoint{xx, Vec::Constant(1, yp)}) -
           evaluate(prob.f, EvalPoint{xx, Vec::Constant(1, ym)});
  };
  double a = 0.9, b = 1.1;
  if (!(branch_gap(a) < 0.0) || !(branch_gap(b) > 0.0))
    throw Error("figure1 jump bracket lost its sign change");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    (branch_gap(mid) < 0.0 ? a : b) = mid;
  }
  const double jump = 0.5 * (a + b);

  body["files"] = Json::array({sfo_path, sol_path});
  body["jump_x"] = jump;
  body["jump_error"] = std::abs(jump - 1.0);
  return body;
}

Json reproduce_xy1(const std::string&) {
  const BilevelProblem prob = builtin("example-xy-1");
  Json body;
  body["closed_form_check"] = closed_form_table(
      prob, {-2.0, -1.0, 0.5, 1.0, 2.0}, +[](double x) { return 1.0 / x; });
  const SolutionSample at0 = solve_lower(prob, Vec::Zero(1));
  body["solution_at_zero"] = to_json(at0);
  body["boundary_flag_at_0.1"] = solve_lower(prob, Vec::Constant(1, 0.1)).boundary_flag;
  body["inf_compactness_at_zero"] = to_json(check_inf_compactness(prob, Vec::Zero(1)));
  body["inf_compactness_at_one"] =
      to_json(check_inf_compactness(prob, Vec::Constant(1, 1.0)));
  return body;
}

Json reproduce_xy3(const std::string&) {
  const BilevelProblem prob = builtin("example-xy3");
  Json body;
  std::vector<double> xs;
  for (int k = 0; k <= 20; ++k) xs.push_back(-2.0 + 4.0 * k / 20.0);
  body["closed_form_check"] = closed_form_table(prob, xs, +[](double x) {
    return -std::copysign(std::pow(std::abs(x) / 4.0, 1.0 / 9.0), x);
  });
  const auto sched = SamplingSchedule::dyadic(14);
  body["inner_semicontinuity_at_4"] = to_json(check_inner_semicontinuity_empirical(
      prob, Vec::Constant(1, 4.0), Vec::Constant(1, -1.0),
      Direction(Vec::Constant(1, 1.0)), sched));
  body["inf_compactness_at_4"] =
      to_json(check_inf_compactness(prob, Vec::Constant(1, 4.0)));
  return body;
}

Json reproduce_principal_agent(const std::string&) {
  const BilevelProblem prob = builtin("principal-agent-2");
  Json body;

  // coarse bilevel scan over the wage box for the best feasible candidate
  GridSpec grid;
  grid.resolution = 401;
  double bestF = kInf;
  EvalPoint best;
  const int side = 31;
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) {
      Vec x(2);
      x << 0.01 + (8.0 - 0.01) * a / (side - 1), 0.01 + (8.0 - 0.01) * b / (side - 1);
      const SolutionSample s = solve_lower(prob, x, grid);
      for (const Vec& y : s.minimizers) {
        const EvalPoint cand{x, y};
        if (evaluate(prob.G[0], cand) > 1e-9) continue;  // IR violated
        const double F = evaluate(prob.F, cand);
        if (F < bestF) {
          bestF = F;
          best = cand;
        }
      }
    }
  }
  if (!std::isfinite(bestF)) throw Error("no IR-feasible candidate found in the wage box");

  // local coordinate refinement of the wage vector
  double step = (8.0 - 0.01) / (side - 1);
  for (int round = 0; round < 12; ++round) {
    bool improved = false;
    for (int i = 0; i < 2 && !improved; ++i) {
      for (const double sgn : {1.0, -1.0}) {
        Vec x = best.x;
        x(i) = std::clamp(x(i) + sgn * step, 0.01, 8.0);
        const SolutionSample s = solve_lower(prob, x, grid);
        for (const Vec& y : s.minimizers) {
          const EvalPoint cand{x, y};
          if (evaluate(prob.G[0], cand) > 1e-9) continue;
          const double F = evaluate(prob.F, cand);
          if (F < bestF - 1e-12) {
            bestF = F;
            best = cand;
            improved = true;
          }
        }
      }
    }
    if (!improved) step *= 0.5;
  }

  body["candidate"] = to_json(best);
  body["F"] = bestF;
  body["ir_value"] = evaluate(prob.G[0], best);
  body["ir_active"] = std::abs(evaluate(prob.G[0], best)) <= 1e-6;
  body["localization"] = to_json(check_localization(prob, best));
  try {
    body["nnamcq"] = to_json(check_nnamcq(prob, best));
  } catch (const Error& e) {
    body["nnamcq"] = Json{{"error", e.what()}};
  }
  const CertifyOutcome cert = certify_pipeline(prob, best, {}, false, grid);
  Json cj;
  cj["certified"] = cert.certified;
  cj["critical_direction_found"] = cert.critical_direction_found;
  if (cert.certified) cj["certificate"] = to_json(cert.certificate);
  if (!cert.reason.empty()) cj["reason"] = cert.reason;
  body["certify"] = cj;
  return body;
}

}  // namespace

Json reproduce(const std::string& name, const std::string& out_dir) {
  if (name == "mirrlees") return reproduce_mirrlees(out_dir);
  if (name == "modified-mirrlees") return reproduce_modified(out_dir);
  if (name == "figure1") return reproduce_figure1(out_dir);
  if (name == "example-xy-1") return reproduce_xy1(out_dir);
  if (name == "example-xy3") return reproduce_xy3(out_dir);
  if (name == "principal-agent-2") return reproduce_principal_agent(out_dir);
  throw InvalidArgument("unknown reproduction target '" + name + "'");
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

struct CommonOpts {
  std::string builtin_name;
  std::string problem_path;
  std::vector<double> point;
  std::vector<double> direction;
  double eps = 0.3;
  double eps_y = 0.4;
  double delta = 0.5;
  int grid_res = 0;
  std::string out = ".";
  std::string json_path;
  bool assume_cq = false;
};

BilevelProblem load_from(const CommonOpts& opts) {
  if (!opts.builtin_name.empty()) return builtin(opts.builtin_name);
  if (!opts.problem_path.empty()) return load_problem_file(opts.problem_path);
  throw InvalidArgument("one of --builtin or --problem is required");
}

EvalPoint point_from(const BilevelProblem& prob, const CommonOpts& opts) {
  if (!opts.point.empty()) return split_point(prob, opts.point);
  return builtin_reference_point(prob);
}

GridSpec grid_from(const CommonOpts& opts) {
  GridSpec g;
  g.resolution = opts.grid_res;
  return g;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_problem = true) {
  if (needs_problem) {
    cmd->add_option("--builtin", opts.builtin_name, "built-in problem name");
    cmd->add_option("--problem", opts.problem_path, "problem config (JSON)");
  }
  cmd->add_option("--point", opts.point, "candidate point, n+m coordinates");
  cmd->add_option("--direction", opts.direction, "direction (n coordinates)");
  cmd->add_option("--eps", opts.eps, "directional neighborhood radius in x");
  cmd->add_option("--eps-y", opts.eps_y, "localization ball radius in y");
  cmd->add_option("--delta", opts.delta, "directional cap width");
  cmd->add_option("--grid", opts.grid_res, "grid resolution override");
  cmd->add_option("--out", opts.out, "output directory (data files)");
  cmd->add_option("--json", opts.json_path, "write the report JSON to this path");
}

}  // namespace

RunResult run(const std::vector<std::string>& args) {
  CLI::App app{"directional first-order analysis of bilevel programs"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string reproduce_name, plot_name;
  std::vector<double> solve_x;
  double xmin = -2.0, xmax = 2.0, radius = 0.05;
  int count = 81, samples = 640;

  CLI::App* c_loc = app.add_subcommand("check-localization",
                                       "single-valued localization conditions");
  add_common(c_loc, opts);

  CLI::App* c_dir = app.add_subcommand("directions", "admissible direction cone");
  add_common(c_dir, opts);

  CLI::App* c_eq = app.add_subcommand("verify-equivalence",
                                      "directional S_FO = S verification");
  add_common(c_eq, opts);
  c_eq->add_option("--samples", samples, "sample budget");

  CLI::App* c_cert = app.add_subcommand("certify", "directional KKT certificate");
  add_common(c_cert, opts);
  c_cert->add_flag("--assume-cq", opts.assume_cq, "proceed under an assumed CQ");

  CLI::App* c_solve = app.add_subcommand("solve-lower", "lower-level argmin oracle");
  add_common(c_solve, opts);
  c_solve->add_option("--x", solve_x, "upper-level point")->required();

  CLI::App* c_val = app.add_subcommand("value-function", "V(x) table to CSV");
  add_common(c_val, opts);
  c_val->add_option("--x-min", xmin);
  c_val->add_option("--x-max", xmax);
  c_val->add_option("--count", count);

  CLI::App* c_rep = app.add_subcommand("reproduce", "re-run a case study");
  c_rep->add_option("name", reproduce_name, "case study name")->required();
  add_common(c_rep, opts, false);

  CLI::App* c_plot = app.add_subcommand("plot-data", "emit plot data CSVs");
  c_plot->add_option("name", plot_name, "figure or problem name")->required();
  add_common(c_plot, opts, false);

  CLI::App* c_foa = app.add_subcommand("detect-foa-failure",
                                       "classical first-order-approach failure search");
  add_common(c_foa, opts);
  c_foa->add_option("--radius", radius, "lower-variable search radius");

  RunResult result;
  result.report.command = args;

  std::vector<std::string> argv_storage = args;
  std::vector<char*> argv;
  std::string prog = "bdfoa";
  argv.push_back(prog.data());
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    result.exit_code = app.exit(e);
    return result;
  }

  try {
    Json& body = result.report.body;
    Json& summary = result.report.summary;

    if (c_loc->parsed()) {
      const BilevelProblem prob = load_from(opts);
      const EvalPoint p = snap_to_stationary(prob, point_from(prob, opts), nullptr);
      const LocalizationReport rep = check_localization(prob, p);
      body["localization"] = to_json(rep);
      body["point"] = to_json(p);
      summary["certified"] = rep.certified();
      result.exit_code = rep.certified() ? kExitOk : kExitNegative;
    } else if (c_dir->parsed()) {
      const BilevelProblem prob = load_from(opts);
      const EvalPoint p = point_from(prob, opts);
      const DirectionCone cone = admissible_directions(prob, p.x, p.y, grid_from(opts));
      body["admissible_directions"] = to_json(cone);
      summary["empty"] = cone.empty;
      result.exit_code = cone.empty ? kExitNegative : kExitOk;
    } else if (c_eq->parsed()) {
      const BilevelProblem prob = load_from(opts);
      const EvalPoint p = point_from(prob, opts);
      if (opts.direction.empty())
        throw InvalidArgument("verify-equivalence requires --direction");
      const Direction u(to_vec(opts.direction));
      const int dirs = prob.n == 1 ? 1 : 16;
      const auto sched =
          SamplingSchedule::covering(opts.eps * 0.999, std::max(1, samples / dirs));
      const EquivalenceReport rep = verify_equivalence(prob, p, u, opts.eps, opts.eps_y,
                                                       opts.delta, sched, grid_from(opts));
      body["equivalence"] = to_json(rep);
      summary["verdict"] = rep.verdict;
      result.exit_code = rep.verdict ? kExitOk : kExitNegative;
    } else if (c_cert->parsed()) {
      const BilevelProblem prob = load_from(opts);
      const EvalPoint p = point_from(prob, opts);
      std::vector<Vec> user_dirs;
      if (!opts.direction.empty()) user_dirs.push_back(to_vec(opts.direction));
      const CertifyOutcome outcome =
          certify_pipeline(prob, p, user_dirs, opts.assume_cq, grid_from(opts));
      body["point"] = to_json(outcome.analyzed_point);
      body["admissible_directions"] = to_json(outcome.admissible);
      if (outcome.certified) body["certificate"] = to_json(outcome.certificate);
      if (!outcome.reason.empty()) body["reason"] = outcome.reason;
      summary["certified"] = outcome.certified;
      summary["critical_direction_found"] = outcome.critical_direction_found;
      result.exit_code = outcome.certified ? kExitOk : kExitNegative;
    } else if (c_solve->parsed()) {
      const BilevelProblem prob = load_from(opts);
      const SolutionSample s = solve_lower(prob, to_vec(solve_x), grid_from(opts));
      body["solution"] = to_json(s);
      summary["minimizers"] = static_cast<int>(s.minimizers.size());
      summary["boundary_flag"] = s.boundary_flag;
    } else if (c_val->parsed()) {
      const BilevelProblem prob = load_from(opts);
      if (prob.n != 1) throw InvalidArgument("value-function CSV requires n = 1");
      std::vector<Vec> xs;
      for (int k = 0; k < count; ++k)
        xs.push_back(Vec::Constant(1, xmin + (xmax - xmin) * k / (count - 1)));
      const auto table = value_function(prob, xs, grid_from(opts));
      std::vector<std::vector<double>> rows;
      for (const auto& s : table) rows.push_back({s.x(0), s.value});
      const std::string path = opts.out + "/value_function.csv";
      emit_csv({"x", "V"}, rows, path);
      body["file"] = path;
      summary["rows"] = static_cast<int>(rows.size());
    } else if (c_rep->parsed()) {
      body[reproduce_name] = reproduce(reproduce_name, opts.out);
      summary["reproduced"] = reproduce_name;
    } else if (c_plot->parsed()) {
      if (plot_name == "figure1") {
        body["figure1"] = reproduce_figure1(opts.out);
      } else {
        const BilevelProblem prob = builtin(plot_name);
        if (prob.n != 1) throw InvalidArgument("plot-data curves require n = 1");
        std::vector<std::vector<double>> vrows, srows;
        for (int k = 0; k < count; ++k) {
          const double x = xmin + (xmax - xmin) * k / (count - 1);
          const SolutionSample s = solve_lower(prob, Vec::Constant(1, x), grid_from(opts));
          vrows.push_back({x, s.value});
          for (const Vec& y : s.minimizers) srows.push_back({x, y(0)});
        }
        const std::string vpath = opts.out + "/" + plot_name + "_value.csv";
        const std::string spath = opts.out + "/" + plot_name + "_solution.csv";
        emit_csv({"x", "V"}, vrows, vpath);
        emit_csv({"x", "y"}, srows, spath);
        body["files"] = Json::array({vpath, spath});
      }
      summary["plotted"] = plot_name;
    } else if (c_foa->parsed()) {
      const BilevelProblem prob = load_from(opts);
      const EvalPoint p = snap_to_stationary(prob, point_from(prob, opts), nullptr);
      const FoaFailureReport rep =
          detect_classical_foa_failure(prob, p, radius, grid_from(opts));
      body["foa_failure"] = to_json(rep);
      summary["failure_found"] = rep.failure_found;
      result.exit_code = kExitOk;
    }

    summary["exit_code"] = result.exit_code;
    if (!opts.json_path.empty()) emit_json(to_json(result.report), opts.json_path);
  } catch (const Error& e) {
    result.report.summary["error"] = e.what();
    result.exit_code = kExitError;
  }
  return result;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  const RunResult result = run(args);
  std::cout << dump_stable(to_json(result.report));
  return result.exit_code;
}

}  // namespace bdfoa
