#include "bdfoa/verify.hpp"

#include <algorithm>
#include <cmath>

namespace bdfoa {

namespace {

// Two-sided Hausdorff distance between finite point sets.
double hausdorff(const std::vector<Vec>& A, const std::vector<Vec>& B) {
  if (A.empty() && B.empty()) return 0.0;
  if (A.empty() || B.empty()) return kInf;
  double h = 0.0;
  for (const Vec& a : A) {
    double d = kInf;
    for (const Vec& b : B) d = std::min(d, (a - b).norm());
    h = std::max(h, d);
  }
  for (const Vec& b : B) {
    double d = kInf;
    for (const Vec& a : A) d = std::min(d, (a - b).norm());
    h = std::max(h, d);
  }
  return h;
}

std::vector<Vec> in_ball(const std::vector<Vec>& pts, const Vec& center, double radius) {
  std::vector<Vec> out;
  for (const Vec& p : pts)
    if ((p - center).norm() <= radius) out.push_back(p);
  return out;
}

}  // namespace

std::vector<Vec> cap_directions(const Direction& u, double delta, int count, int dim) {
  std::vector<Vec> dirs;
  if (u.zero) {
    // all of the sphere
    if (dim == 1) {
      dirs.push_back(Vec::Constant(1, 1.0));
      dirs.push_back(Vec::Constant(1, -1.0));
    } else if (dim == 2) {
      for (int k = 0; k < count; ++k) {
        const double a = 2.0 * M_PI * k / count;
        Vec d(2);
        d << std::cos(a), std::sin(a);
        dirs.push_back(d);
      }
    } else {
      for (int k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = k * 2.399963229728653;
        Vec d(3);
        d << r * std::cos(a), r * std::sin(a), z;
        dirs.push_back(d);
      }
    }
    return dirs;
  }
  const Vec base = u.d / u.d.norm();
  dirs.push_back(base);
  if (dim == 1) return dirs;  // the cap contains only u itself for delta < 2
  // ring at 95% of the cap angle ||d' - u|| = delta
  const double theta = 2.0 * std::asin(std::min(1.0, delta / 2.0)) * 0.95;
  // orthonormal complement of base
  Eigen::JacobiSVD<Mat> svd(base, Eigen::ComputeFullU);
  const Mat ortho = svd.matrixU().rightCols(dim - 1);
  for (int k = 0; k + 1 < count; ++k) {
    Vec t;
    if (dim == 2) {
      t = ortho.col(0) * (k % 2 == 0 ? 1.0 : -1.0);
    } else {
      const double a = 2.0 * M_PI * k / (count - 1);
      t = ortho.col(0) * std::cos(a) + ortho.col(1) * std::sin(a);
    }
    const double frac = 0.25 + 0.75 * ((k / (dim == 2 ? 2 : 1)) % 4) / 3.0;
    Vec d = std::cos(theta * frac) * base + std::sin(theta * frac) * t;
    dirs.push_back(d / d.norm());
  }
  return dirs;
}

EquivalenceReport verify_equivalence(const BilevelProblem& prob, const EvalPoint& point,
                                     const Direction& u, double eps_x, double eps_y,
                                     double delta, const SamplingSchedule& sched,
                                     const GridSpec& grid) {
  EquivalenceReport rep;
  rep.point = point;
  rep.u = u.d;
  rep.eps_x = eps_x;
  rep.eps_y = eps_y;
  rep.delta = delta;
  rep.verdict = true;

  std::vector<Vec> dirs = sched.perturbations;
  if (dirs.empty()) dirs = cap_directions(u, delta, 16, prob.n);

  // sample points: the center plus t * d' over the schedule and the cap
  std::vector<Vec> xs{point.x};
  for (const double t : sched.t_values) {
    if (t <= 0.0 || t >= eps_x) continue;
    for (const Vec& d : dirs) xs.push_back(point.x + t * d);
  }

  GridSpec ball_grid = grid;  // stationary scan only needs the eps_y ball
  if (!ball_grid.window_lo) {
    ball_grid = GridSpec::around(point.y, eps_y * 1.5, grid.resolution);
    if (ball_grid.resolution == 0) ball_grid.resolution = 2001;
  }

  for (const Vec& x : xs) {
    ++rep.sample_count;
    const SolutionSample sol = solve_lower(prob, x, grid);
    const std::vector<Vec> s_ball = in_ball(sol.minimizers, point.y, eps_y);

    const StationarySample st = stationary_set(prob, x, ball_grid, point.y, eps_y);
    std::vector<Vec> fo_ball;
    for (const auto& p : st.stationary_points) fo_ball.push_back(p.y);

    const double h = hausdorff(s_ball, fo_ball);
    const bool ok = !s_ball.empty() && h <= 1e-4;
    if (!ok && rep.verdict) {
      rep.verdict = false;
      rep.worst_x = x;
      rep.worst_hausdorff = h;
      rep.detail = s_ball.empty() ? "S(x) does not meet the y-ball"
                                  : "S_FO and S differ inside the y-ball";
    }
    rep.worst_hausdorff = std::max(rep.worst_hausdorff, std::isinf(h) ? 0.0 : h);
  }
  return rep;
}

namespace {

// Solves grad_y f(x, y) = 0 in x near x0 (Gauss-Newton least-norm), then
// minimizes F along the fiber's tangent space. Returns nullopt if the
// fiber is lost.
std::optional<Vec> fiber_minimize_F(const BilevelProblem& prob, Vec x, const Vec& y,
                                    const Vec& x_center, double x_range) {
  const int n = prob.n, m = prob.m;
  auto residual = [&](const Vec& xx) {
    return differentiate(prob.f, EvalPoint{xx, y}).gradient.segment(n, m).eval();
  };
  auto jac_x = [&](const Vec& xx) {
    return differentiate(prob.f, EvalPoint{xx, y}).hessian.block(n, 0, m, n).eval();
  };
  auto project = [&](Vec& xx) -> bool {  // Newton onto the fiber
    for (int it = 0; it < 60; ++it) {
      const Vec r = residual(xx);
      if (r.cwiseAbs().maxCoeff() <= 1e-12) return true;
      const Mat J = jac_x(xx);
      const Mat JJt = J * J.transpose();
      const Eigen::FullPivLU<Mat> lu(JJt);
      if (!lu.isInvertible()) return false;
      xx -= J.transpose() * lu.solve(r);
      if ((xx - x_center).cwiseAbs().maxCoeff() > x_range) return false;
    }
    return residual(xx).cwiseAbs().maxCoeff() <= 1e-9;
  };

  if (!project(x)) return std::nullopt;
  if (n == m) return x;  // zero-dimensional fiber

  // tangential descent of F on the fiber
  double step = 0.05 * std::max(1.0, x_range);
  for (int it = 0; it < 200 && step > 1e-12; ++it) {
    const Mat J = jac_x(x);
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullV);
    int rank = 0;
    const auto& sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > std::max(1e-12, sv(0) * 1e-10)) ++rank;
    const Mat N = svd.matrixV().rightCols(n - rank);
    if (N.cols() == 0) break;
    const Vec gFx = differentiate(prob.F, EvalPoint{x, y}).gradient.head(n);
    Vec dir = -(N * (N.transpose() * gFx));
    if (dir.norm() <= 1e-13) break;
    dir /= dir.norm();
    Vec trial = x + step * dir;
    if (!project(trial) ||
        evaluate(prob.F, EvalPoint{trial, y}) >= evaluate(prob.F, EvalPoint{x, y})) {
      step *= 0.5;
      continue;
    }
    if ((trial - x_center).cwiseAbs().maxCoeff() > x_range) break;
    x = trial;
  }
  return x;
}

}  // namespace

FoaFailureReport detect_classical_foa_failure(const BilevelProblem& prob,
                                              const EvalPoint& point, double radius,
                                              const GridSpec& grid) {
  (void)grid;
  if (box_stationarity_residual(prob, point.x, point.y) > 1e-9)
    throw InvalidArgument("point is not stationary for the SCOP system");
  FoaFailureReport rep;
  rep.point = point;
  rep.radius = radius;
  const double F0 = evaluate(prob.F, point);

  // x-range of the search, from the branch slope |f_yy| / sigma_min(f_yx)
  const Derivatives df = differentiate(prob.f, point);
  const Mat f_yx = df.hessian.block(prob.n, 0, prob.m, prob.n);
  const Mat f_yy = df.hessian.block(prob.n, prob.n, prob.m, prob.m);
  double slope = 1.0;
  const Eigen::JacobiSVD<Mat> svd(f_yx);
  const double smin = svd.singularValues().minCoeff();
  if (smin > 1e-12) slope = f_yy.norm() / smin;
  const double x_range = radius * std::min(50.0, 1.0 + 2.0 * slope);

  if (prob.m != 1)
    throw InvalidArgument("FOA-failure continuation implemented for m = 1");

  double best_F = F0;
  for (const double side : {1.0, -1.0}) {
    Vec x = point.x;
    const int steps = 200;
    for (int k = 1; k <= steps; ++k) {
      Vec y = point.y;
      y(0) += side * radius * k / steps;
      if (!prob.Y.contains(y, 1e-12)) break;
      const auto xf = fiber_minimize_F(prob, x, y, point.x, x_range);
      if (!xf) {
        rep.branch_fold = true;
        break;
      }
      x = *xf;  // continuation warm start
      const EvalPoint cand{x, y};
      bool feasible = true;
      for (const auto& gexpr : prob.G) feasible = feasible && evaluate(gexpr, cand) <= 1e-9;
      if (!feasible) continue;
      const double Fc = evaluate(prob.F, cand);
      if (Fc < best_F - 1e-9 && Fc < F0 - 1e-9) {
        best_F = Fc;
        rep.failure_found = true;
        rep.witness = cand;
        rep.margin = F0 - Fc;
        rep.witness_residual = box_stationarity_residual(prob, x, y);
      }
    }
  }
  return rep;
}

LocalMinReport verify_bilevel_local_min(const BilevelProblem& prob, const EvalPoint& point,
                                        const NbhdSpec& nbhd, const GridSpec& grid) {
  LocalMinReport rep;
  const double F0 = evaluate(prob.F, point);

  // deterministic x samples covering the ball (or the directional sector)
  std::vector<Vec> xs;
  const double r = nbhd.x_radius;
  if (nbhd.direction) {
    const auto dirs = cap_directions(*nbhd.direction, nbhd.delta, 16, prob.n);
    const int per_dir = std::max(1, nbhd.min_samples / static_cast<int>(dirs.size()));
    for (int j = 1; j <= per_dir; ++j)
      for (const Vec& d : dirs) xs.push_back(point.x + (r * j / (per_dir + 1)) * d);
    xs.push_back(point.x);
  } else if (prob.n == 1) {
    const int count = std::max(nbhd.min_samples, 2);
    for (int j = 0; j < count; ++j)
      xs.push_back(point.x + Vec::Constant(1, -r + 2.0 * r * j / (count - 1)));
  } else if (prob.n == 2) {
    int side = static_cast<int>(std::ceil(std::sqrt(nbhd.min_samples * 4.0 / M_PI)));
    while (static_cast<int>(xs.size()) < nbhd.min_samples) {
      xs.clear();
      for (int a = 0; a < side; ++a) {
        for (int b = 0; b < side; ++b) {
          Vec x = point.x;
          x(0) += -r + 2.0 * r * a / (side - 1);
          x(1) += -r + 2.0 * r * b / (side - 1);
          if ((x - point.x).norm() <= r) xs.push_back(x);
        }
      }
      ++side;
    }
  } else {
    int side = static_cast<int>(std::ceil(std::cbrt(nbhd.min_samples * 6.0 / M_PI)));
    while (static_cast<int>(xs.size()) < nbhd.min_samples) {
      xs.clear();
      for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b)
          for (int c = 0; c < side; ++c) {
            Vec x = point.x;
            x(0) += -r + 2.0 * r * a / (side - 1);
            x(1) += -r + 2.0 * r * b / (side - 1);
            x(2) += -r + 2.0 * r * c / (side - 1);
            if ((x - point.x).norm() <= r) xs.push_back(x);
          }
      ++side;
    }
  }

  rep.verdict = true;
  for (const Vec& x : xs) {
    ++rep.samples;
    const SolutionSample sol = solve_lower(prob, x, grid);
    for (const Vec& y : sol.minimizers) {
      if ((y - point.y).norm() > nbhd.y_radius) continue;
      bool feasible = true;
      for (const auto& gexpr : prob.G)
        feasible = feasible && evaluate(gexpr, EvalPoint{x, y}) <= 1e-9;
      if (!feasible) continue;
      const double Fv = evaluate(prob.F, EvalPoint{x, y});
      const double violation = F0 - Fv;
      if (violation > 1e-9) {
        rep.verdict = false;
        if (violation > rep.worst_violation) {
          rep.worst_violation = violation;
          rep.worst_point = EvalPoint{x, y};
        }
      }
    }
  }
  return rep;
}

}  // namespace bdfoa
