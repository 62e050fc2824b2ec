#include "bdfoa/regularity.hpp"

#include <algorithm>
#include <cmath>

namespace bdfoa {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::NotApplicable: return "not-applicable";
  }
  return "?";
}

namespace {

Mat hessian_yy(const BilevelProblem& prob, const EvalPoint& p) {
  return differentiate(prob.f, p).hessian.block(prob.n, prob.n, prob.m, prob.m);
}

Vec grad_y_of_f(const BilevelProblem& prob, const EvalPoint& p) {
  return differentiate(prob.f, p).gradient.segment(prob.n, prob.m);
}

void require_stationary(const BilevelProblem& prob, const EvalPoint& p) {
  if (box_stationarity_residual(prob, p.x, p.y) > 1e-9)
    throw InvalidArgument("point is not lower-level stationary");
}

double interior_margin(const BoxSet& Y, const Vec& y) {
  double margin = kInf;
  for (int i = 0; i < Y.dim(); ++i) {
    if (std::isfinite(Y.lower(i))) margin = std::min(margin, y(i) - Y.lower(i));
    if (std::isfinite(Y.upper(i))) margin = std::min(margin, Y.upper(i) - y(i));
  }
  return margin;
}

// Indices of the critical cone by tag class.
struct ConeIndex {
  std::vector<int> sign;  // NonNeg / NonPos coordinates
  std::vector<int> free_;
};

ConeIndex split_cone(const SignedCoordinateCone& K) {
  ConeIndex ix;
  for (int i = 0; i < K.dim(); ++i) {
    if (K.tags[i] == CoordTag::Free) ix.free_.push_back(i);
    if (K.tags[i] == CoordTag::NonNeg || K.tags[i] == CoordTag::NonPos)
      ix.sign.push_back(i);
  }
  return ix;
}

}  // namespace

ConditionReport check_interior_nonsingular(const BilevelProblem& prob, const EvalPoint& p) {
  require_stationary(prob, p);
  ConditionReport r;
  const Mat H = hessian_yy(prob, p);
  const Eigen::JacobiSVD<Mat> svd(H);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  r.value = smin;
  const bool interior = interior_margin(prob.Y, p.y) > 1e-9;
  r.verdict = interior && smin >= 1e-8 * std::max(1.0, smax) ? Verdict::Holds : Verdict::Fails;
  if (!interior) r.note = "point is not interior to Y";
  return r;
}

ConditionReport check_strong_monotonicity(const BilevelProblem& prob, const EvalPoint& p) {
  ConditionReport r;
  const Mat H = hessian_yy(prob, p);
  std::vector<int> span;
  for (int i = 0; i < prob.m; ++i)
    if (prob.Y.lower(i) < prob.Y.upper(i)) span.push_back(i);
  if (span.empty()) {
    r.verdict = Verdict::Holds;
    r.value = kInf;  // span(Y - Y) = {0}: vacuous
    r.note = "span(Y-Y) is trivial";
    return r;
  }
  Mat Hs(span.size(), span.size());
  for (size_t a = 0; a < span.size(); ++a)
    for (size_t b = 0; b < span.size(); ++b)
      Hs(static_cast<int>(a), static_cast<int>(b)) = H(span[a], span[b]);
  const Eigen::SelfAdjointEigenSolver<Mat> eig(Hs);
  r.value = eig.eigenvalues().minCoeff();
  r.verdict = r.value > 1e-8 ? Verdict::Holds : Verdict::Fails;
  Vec worst = Vec::Zero(prob.m);
  for (size_t a = 0; a < span.size(); ++a) worst(span[a]) = eig.eigenvectors().col(0)(a);
  r.worst_direction = worst;
  if (!prob.Y.bounded()) {
    r.pointwise_only = true;
    r.note = "pointwise only: Hessian evaluated at (x,y); Y is unbounded";
  }
  return r;
}

namespace {

// Exact minimum of w^T H w over K intersect the unit sphere by KKT
// enumeration: on each face (a subset of the sign coordinates pinned to
// zero) every candidate is an eigenvector of the principal submatrix; a
// candidate counts when it lies in the face's sign sector.
struct ConeQuadMin {
  double min_value = kInf;
  Vec worst;
  bool any_candidate = false;
};

ConeQuadMin min_quadratic_over_cone(const Mat& H, const SignedCoordinateCone& K) {
  const int m = static_cast<int>(H.rows());
  const ConeIndex ix = split_cone(K);
  ConeQuadMin out;
  const size_t s = ix.sign.size();
  for (size_t mask = 0; mask < (size_t{1} << s); ++mask) {
    std::vector<int> coords = ix.free_;
    std::vector<int> sector;  // sign-constrained coords on this face
    for (size_t j = 0; j < s; ++j) {
      if (mask & (size_t{1} << j)) continue;  // pinned to zero
      coords.push_back(ix.sign[j]);
      sector.push_back(ix.sign[j]);
    }
    if (coords.empty()) continue;
    Mat Hc(coords.size(), coords.size());
    for (size_t a = 0; a < coords.size(); ++a)
      for (size_t b = 0; b < coords.size(); ++b)
        Hc(static_cast<int>(a), static_cast<int>(b)) = H(coords[a], coords[b]);
    const Eigen::SelfAdjointEigenSolver<Mat> eig(Hc);
    for (int k = 0; k < eig.eigenvalues().size(); ++k) {
      Vec w = Vec::Zero(m);
      for (size_t a = 0; a < coords.size(); ++a)
        w(coords[a]) = eig.eigenvectors().col(k)(static_cast<int>(a));
      for (const double sgn : {1.0, -1.0}) {
        const Vec cand = sgn * w;
        bool in_sector = true;
        for (int i : sector) {
          if (K.tags[i] == CoordTag::NonNeg && cand(i) < -1e-12) in_sector = false;
          if (K.tags[i] == CoordTag::NonPos && cand(i) > 1e-12) in_sector = false;
        }
        if (!in_sector) continue;
        out.any_candidate = true;
        const double q = cand.dot(H * cand);
        if (q < out.min_value) {
          out.min_value = q;
          out.worst = cand;
        }
      }
    }
  }
  return out;
}

}  // namespace

ConditionReport check_sosc_box(const BilevelProblem& prob, const EvalPoint& p) {
  if (prob.m > 3) throw InvalidArgument("SOSC face enumeration limited to m <= 3");
  require_stationary(prob, p);
  ConditionReport r;
  const Mat H = hessian_yy(prob, p);
  const SignedCoordinateCone K = critical_cone(prob.Y, p.y, grad_y_of_f(prob, p));
  if (K.is_zero()) {
    r.verdict = Verdict::Holds;
    r.note = "critical cone is {0}";
    r.value = kInf;
    return r;
  }
  const ConeQuadMin q = min_quadratic_over_cone(H, K);
  r.value = q.any_candidate ? q.min_value : kInf;
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  r.verdict = r.value > 1e-8 * scale ? Verdict::Holds : Verdict::Fails;
  if (q.any_candidate) r.worst_direction = q.worst;
  return r;
}

ConditionReport check_condition_ivb(const BilevelProblem& prob, const EvalPoint& p) {
  if (prob.m > 3) throw InvalidArgument("face enumeration limited to m <= 3");
  require_stationary(prob, p);
  ConditionReport r;
  const int m = prob.m;
  const Mat H = hessian_yy(prob, p);
  const SignedCoordinateCone K = critical_cone(prob.Y, p.y, grad_y_of_f(prob, p));
  if (K.is_zero()) {
    r.verdict = Verdict::Holds;
    r.note = "critical cone is {0}";
    return r;
  }
  const ConeIndex ix = split_cone(K);
  const size_t s = ix.sign.size();
  // Search every face for a nonzero w in K with -H w in N_K(w).
  for (size_t mask = 0; mask < (size_t{1} << s); ++mask) {
    std::vector<Vec> halfspaces, equalities;
    for (int i = 0; i < m; ++i) {
      if (K.tags[i] == CoordTag::Zero) equalities.push_back(Vec::Unit(m, i));
    }
    for (size_t j = 0; j < s; ++j) {
      const int i = ix.sign[j];
      if (mask & (size_t{1} << j)) {
        // pinned: w_i = 0 and (-H w)_i must be in the bound's normal ray
        equalities.push_back(Vec::Unit(m, i));
        const Vec row = H.row(i).transpose();
        if (row.norm() > 0)
          halfspaces.push_back(K.tags[i] == CoordTag::NonNeg ? Vec(-row) : row);
      } else {
        // in the sector: sign constraint on w_i, (H w)_i = 0
        halfspaces.push_back(K.tags[i] == CoordTag::NonNeg ? Vec(-Vec::Unit(m, i))
                                                           : Vec(Vec::Unit(m, i)));
        const Vec row = H.row(i).transpose();
        if (row.norm() > 0) equalities.push_back(row);
      }
    }
    for (int i : ix.free_) {
      const Vec row = H.row(i).transpose();
      if (row.norm() > 0) equalities.push_back(row);
    }
    const PolyConeRep face = PolyConeRep::from_halfspaces(m, halfspaces, equalities);
    for (const Vec& g : face.generators) {
      if (g.norm() > 1e-9) {
        r.verdict = Verdict::Fails;
        r.worst_direction = g;
        return r;
      }
    }
  }
  r.verdict = Verdict::Holds;
  return r;
}

LocalizationReport check_localization(const BilevelProblem& prob, const EvalPoint& p) {
  LocalizationReport rep;
  auto guarded = [&](ConditionReport (*check)(const BilevelProblem&, const EvalPoint&)) {
    try {
      return check(prob, p);
    } catch (const Error& e) {
      ConditionReport r;
      r.verdict = Verdict::NotApplicable;
      r.note = e.what();
      return r;
    }
  };
  rep.interior_nonsingular = guarded(check_interior_nonsingular);
  rep.strong_monotonicity = guarded(check_strong_monotonicity);
  rep.sosc = guarded(check_sosc_box);
  rep.mixed_second_order = guarded(check_condition_ivb);
  return rep;
}

bool DirectionCone::contains(const Vec& u, double slack) const {
  if (empty) return false;
  if (full_space) return true;
  for (const Vec& n : normals)
    if (n.dot(u) < slack) return false;
  return true;
}

DirectionCone admissible_directions(const BilevelProblem& prob, const Vec& x_bar,
                                    const Vec& y_bar, const GridSpec& grid) {
  const SolutionSample sol = solve_lower(prob, x_bar, grid);
  DirectionCone cone;
  double dist = kInf;
  for (const Vec& y : sol.minimizers) dist = std::min(dist, (y - y_bar).norm());
  if (dist > 1e-4)
    throw InvalidArgument("y-bar is not a lower-level solution at x-bar (oracle distance " +
                          format_g12(dist) + ")");

  const Vec gx_bar = differentiate(prob.f, EvalPoint{x_bar, y_bar}).gradient.head(prob.n);
  for (const Vec& y : sol.minimizers) {
    if ((y - y_bar).norm() <= 1e-4) continue;
    const Vec gx = differentiate(prob.f, EvalPoint{x_bar, y}).gradient.head(prob.n);
    cone.normals.push_back(gx - gx_bar);
    cone.competitors.push_back(y);
  }
  if (cone.normals.empty()) {
    cone.full_space = true;
    cone.witness_direction = Vec::Unit(prob.n, 0);
    cone.witness_slack = kInf;
    return cone;
  }

  // Feasibility search for the strict system over the unit sphere (n <= 3).
  auto slack_of = [&](const Vec& u) {
    double s = kInf;
    for (const Vec& n : cone.normals) s = std::min(s, n.dot(u));
    return s;
  };
  std::vector<Vec> candidates;
  Vec mean = Vec::Zero(prob.n);
  for (const Vec& n : cone.normals) mean += n / n.norm();
  if (mean.norm() > 1e-12) candidates.push_back(mean / mean.norm());
  if (prob.n == 1) {
    candidates.push_back(Vec::Constant(1, 1.0));
    candidates.push_back(Vec::Constant(1, -1.0));
  } else if (prob.n == 2) {
    for (int k = 0; k < 720; ++k) {
      const double a = 2.0 * M_PI * k / 720;
      Vec u(2);
      u << std::cos(a), std::sin(a);
      candidates.push_back(u);
    }
  } else if (prob.n == 3) {
    for (int k = 0; k < 2000; ++k) {  // Fibonacci sphere
      const double z = 1.0 - 2.0 * (k + 0.5) / 2000;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = k * 2.399963229728653;
      Vec u(3);
      u << r * std::cos(a), r * std::sin(a), z;
      candidates.push_back(u);
    }
  } else {
    throw InvalidArgument("admissible-direction search limited to n <= 3");
  }
  double best = -kInf;
  Vec best_u;
  for (const Vec& u : candidates) {
    const double s = slack_of(u);
    if (s > best) {
      best = s;
      best_u = u;
    }
  }
  if (best >= 1e-8) {
    cone.witness_direction = best_u;
    cone.witness_slack = best;
  } else {
    cone.empty = true;
  }
  return cone;
}

InfCompactnessEvidence check_inf_compactness(const BilevelProblem& prob, const Vec& x_bar,
                                             const GridSpec& window, double level_margin) {
  InfCompactnessEvidence ev;
  ev.note = "heuristic evidence from sampled sublevel sets, not a proof";
  const SolutionSample base = solve_lower(prob, x_bar, window);
  ev.alpha = base.value + level_margin;

  // window bounds (defaults +-10), probe region 10x wider
  const int m = prob.m;
  Vec wlo(m), whi(m);
  for (int i = 0; i < m; ++i) {
    wlo(i) = std::max(window.window_lo ? (*window.window_lo)(i) : -10.0, prob.Y.lower(i));
    whi(i) = std::min(window.window_hi ? (*window.window_hi)(i) : 10.0, prob.Y.upper(i));
  }
  Vec plo(m), phi(m);
  for (int i = 0; i < m; ++i) {
    const double c = 0.5 * (wlo(i) + whi(i)), half = 0.5 * (whi(i) - wlo(i));
    plo(i) = std::max(c - 10.0 * half, prob.Y.lower(i));
    phi(i) = std::min(c + 10.0 * half, prob.Y.upper(i));
  }

  // x samples: center plus ball of radius 1e-2
  std::vector<Vec> xs{x_bar};
  const double r = 1e-2;
  if (prob.n == 1) {
    for (double s : {r, -r, 0.5 * r, -0.5 * r}) xs.push_back(x_bar + Vec::Constant(1, s));
  } else {
    for (int i = 0; i < prob.n; ++i) {
      for (double s : {r, -r}) {
        Vec x = x_bar;
        x(i) += s;
        xs.push_back(x);
      }
    }
    Vec diag = x_bar + Vec::Constant(prob.n, r / std::sqrt(double(prob.n)));
    xs.push_back(diag);
  }

  const int res = m == 1 ? 4001 : m == 2 ? 201 : 61;
  ev.holds = true;
  ev.min_margin = kInf;
  ev.worst_x = x_bar;
  const double probe_step = (phi(0) - plo(0)) / (res - 1);
  for (const Vec& x : xs) {
    long total = 1;
    for (int i = 0; i < m; ++i) total *= res;
    for (long c = 0; c < total; ++c) {
      long rem = c;
      Vec y(m);
      for (int i = 0; i < m; ++i) {
        const int k = static_cast<int>(rem % res);
        rem /= res;
        y(i) = plo(i) + (phi(i) - plo(i)) * k / (res - 1);
      }
      double v;
      try {
        v = evaluate(prob.f, EvalPoint{x, y});
      } catch (const DomainError&) {
        continue;
      }
      if (v > ev.alpha) continue;
      // distance to window edges that are interior to Y; negative = escape
      double margin = kInf;
      for (int i = 0; i < m; ++i) {
        if (wlo(i) > prob.Y.lower(i) + 1e-12) margin = std::min(margin, y(i) - wlo(i));
        if (whi(i) < prob.Y.upper(i) - 1e-12) margin = std::min(margin, whi(i) - y(i));
      }
      if (margin < ev.min_margin) {
        ev.min_margin = margin;
        ev.worst_x = x;
      }
      if (margin <= probe_step) ev.holds = false;
    }
  }
  return ev;
}

InnerSemicontEmpirical check_inner_semicontinuity_empirical(
    const BilevelProblem& prob, const Vec& x_bar, const Vec& y_bar, const Direction& u,
    const SamplingSchedule& sched, const GridSpec& grid) {
  InnerSemicontEmpirical r;
  std::vector<Vec> dirs = sched.perturbations;
  if (dirs.empty()) dirs.push_back(u.d);
  for (const double t : sched.t_values) {
    double worst = 0.0;
    for (const Vec& d : dirs) {
      const SolutionSample s = solve_lower(prob, x_bar + t * d, grid);
      double dist = kInf;
      for (const Vec& y : s.minimizers) dist = std::min(dist, (y - y_bar).norm());
      worst = std::max(worst, dist);
    }
    r.trace.emplace_back(t, worst);
    r.max_distance = std::max(r.max_distance, worst);
  }
  r.final_distance = r.trace.empty() ? kInf : r.trace.back().second;
  r.holds = r.final_distance <= 1e-3;
  return r;
}

InnerSemicontReport inner_semicontinuity_report(const BilevelProblem& prob, const Vec& x_bar,
                                                const Vec& y_bar, const GridSpec& grid) {
  InnerSemicontReport rep;
  const SolutionSample sol = solve_lower(prob, x_bar, grid);
  rep.solution_set = sol.minimizers;
  rep.singleton = sol.minimizers.size() == 1;
  rep.admissible = admissible_directions(prob, x_bar, y_bar, grid);
  rep.inf_compactness = check_inf_compactness(prob, x_bar, grid);
  return rep;
}

}  // namespace bdfoa
