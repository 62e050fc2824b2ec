#include "bdfoa/lower.hpp"

#include <algorithm>
#include <cmath>

namespace bdfoa {

namespace {

struct Axis {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  double step() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
  double at(int k) const { return count > 1 ? lo + (hi - lo) * k / (count - 1) : lo; }
};

int default_resolution(int m) {
  switch (m) {
    case 1: return 4001;
    case 2: return 401;
    case 3: return 101;
    default: throw InvalidArgument("grid oracles are limited to m <= 3");
  }
}

std::vector<Axis> build_axes(const BilevelProblem& prob, const GridSpec& grid) {
  const int m = prob.m;
  if (m > 3) throw InvalidArgument("grid oracles are limited to m <= 3");
  const int res = grid.resolution > 0 ? grid.resolution : default_resolution(m);
  if (res < 2) throw InvalidArgument("grid resolution must be >= 2");
  std::vector<Axis> axes(m);
  for (int i = 0; i < m; ++i) {
    const double wlo = grid.window_lo ? (*grid.window_lo)(i) : -10.0;
    const double whi = grid.window_hi ? (*grid.window_hi)(i) : 10.0;
    Axis& ax = axes[i];
    ax.lo = std::max(wlo, prob.Y.lower(i));
    ax.hi = std::min(whi, prob.Y.upper(i));
    if (!(ax.lo <= ax.hi)) throw InvalidArgument("sampling window does not intersect Y");
    ax.count = ax.lo == ax.hi ? 1 : res;
  }
  return axes;
}

long total_points(const std::vector<Axis>& axes) {
  long t = 1;
  for (const auto& ax : axes) t *= ax.count;
  return t;
}

Vec point_at(const std::vector<Axis>& axes, long flat) {
  Vec y(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) {
    y(static_cast<int>(i)) = axes[i].at(static_cast<int>(flat % axes[i].count));
    flat /= axes[i].count;
  }
  return y;
}

Vec grad_y(const BilevelProblem& prob, const Vec& x, const Vec& y) {
  EvalPoint p{x, y};
  Vec g(prob.m);
  for (int i = 0; i < prob.m; ++i) g(i) = derivative_single(prob.f, p, prob.n + i);
  return g;
}

struct YDerivs {
  double value;
  Vec g;
  Mat H;
};

YDerivs derivs_y(const BilevelProblem& prob, const Vec& x, const Vec& y) {
  const Derivatives d = differentiate(prob.f, EvalPoint{x, y});
  return {d.value, d.gradient.segment(prob.n, prob.m),
          d.hessian.block(prob.n, prob.n, prob.m, prob.m)};
}

// Projected Newton on the stationarity system over `box`; returns the
// refined point or nullopt on divergence.
std::optional<Vec> newton_polish(const BilevelProblem& prob, const Vec& x, Vec y,
                                 const BoxSet& box, double trust_radius,
                                 double target = 1e-12) {
  const int m = prob.m;
  const Vec start = y;
  for (int it = 0; it < 50; ++it) {
    const YDerivs d = derivs_y(prob, x, y);
    // active bounds with the correct multiplier sign stay fixed
    std::vector<int> free;
    double residual = 0.0;
    for (int i = 0; i < m; ++i) {
      const bool at_lo = y(i) <= box.lower(i) + 1e-12;
      const bool at_hi = y(i) >= box.upper(i) - 1e-12;
      if (at_lo && d.g(i) > 0) continue;
      if (at_hi && d.g(i) < 0) continue;
      free.push_back(i);
      residual = std::max(residual, std::abs(d.g(i)));
    }
    if (residual <= target || free.empty()) return y;
    Mat H(free.size(), free.size());
    Vec g(free.size());
    for (size_t a = 0; a < free.size(); ++a) {
      g(static_cast<int>(a)) = d.g(free[a]);
      for (size_t b = 0; b < free.size(); ++b)
        H(static_cast<int>(a), static_cast<int>(b)) = d.H(free[a], free[b]);
    }
    const Eigen::FullPivLU<Mat> lu(H);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec step = lu.solve(-g);
    if (!step.allFinite()) return std::nullopt;
    for (size_t a = 0; a < free.size(); ++a) y(free[a]) += step(static_cast<int>(a));
    y = box.project(y);
    if ((y - start).norm() > trust_radius) return std::nullopt;
  }
  return grad_y(prob, x, y).cwiseAbs().maxCoeff() <= 1e-9 ? std::optional<Vec>(y)
                                                          : std::nullopt;
}

void sort_points(std::vector<Vec>& pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a(i) < b(i)) return true;
      if (a(i) > b(i)) return false;
    }
    return false;
  });
}

std::vector<Vec> merge_close(std::vector<Vec> pts, double radius) {
  sort_points(pts);
  std::vector<Vec> out;
  for (const Vec& p : pts) {
    bool dup = false;
    for (const Vec& q : out) dup = dup || (p - q).norm() <= radius;
    if (!dup) out.push_back(p);
  }
  return out;
}

}  // namespace

GridSpec GridSpec::around(const Vec& center, double radius, int resolution) {
  GridSpec g;
  g.window_lo = Vec(center.array() - radius);
  g.window_hi = Vec(center.array() + radius);
  // keep the default outer window as a hard cap
  for (int i = 0; i < center.size(); ++i) {
    (*g.window_lo)(i) = std::max((*g.window_lo)(i), -10.0);
    (*g.window_hi)(i) = std::min((*g.window_hi)(i), 10.0);
  }
  g.resolution = resolution;
  return g;
}

SamplingSchedule SamplingSchedule::dyadic(int k_max) {
  SamplingSchedule s;
  for (int k = 1; k <= k_max; ++k) s.t_values.push_back(std::pow(2.0, -k));
  return s;
}

SamplingSchedule SamplingSchedule::covering(double eps, int count) {
  SamplingSchedule s;
  const int linear = std::max(count - 8, 1);
  for (int j = linear; j >= 1; --j) s.t_values.push_back(eps * j / (linear + 1));
  while (static_cast<int>(s.t_values.size()) < count)
    s.t_values.push_back(s.t_values.back() * 0.5);
  std::sort(s.t_values.rbegin(), s.t_values.rend());
  return s;
}

double box_stationarity_residual(const BilevelProblem& prob, const Vec& x, const Vec& y) {
  const Vec g = grad_y(prob, x, y);
  return (y - prob.Y.project(y - g)).cwiseAbs().maxCoeff();
}

SolutionSample solve_lower(const BilevelProblem& prob, const Vec& x, const GridSpec& grid) {
  if (x.size() != prob.n) throw DimensionError("x dimension mismatch");
  const std::vector<Axis> axes = build_axes(prob, grid);
  const long total = total_points(axes);
  const int m = prob.m;

  std::vector<double> values(total);
  for (long c = 0; c < total; ++c)
    values[c] = evaluate(prob.f, EvalPoint{x, point_at(axes, c)});

  // local grid minima (axis neighbors), always including the global best
  std::vector<long> candidates;
  long best = 0;
  for (long c = 0; c < total; ++c) {
    if (values[c] < values[best]) best = c;
    bool local_min = true;
    long stride = 1;
    for (int i = 0; i < m && local_min; ++i) {
      const long k = (c / stride) % axes[i].count;
      if (k > 0 && values[c - stride] < values[c]) local_min = false;
      if (k + 1 < axes[i].count && values[c + stride] < values[c]) local_min = false;
      stride *= axes[i].count;
    }
    if (local_min) candidates.push_back(c);
  }
  if (std::find(candidates.begin(), candidates.end(), best) == candidates.end())
    candidates.push_back(best);

  // refinement box: the sampling window itself (results stay window-relative)
  Vec blo(m), bhi(m);
  for (int i = 0; i < m; ++i) {
    blo(i) = axes[i].lo;
    bhi(i) = axes[i].hi;
  }
  const BoxSet refine_box = BoxSet::bounds(blo, bhi);
  double max_step = 0.0;
  for (const auto& ax : axes) max_step = std::max(max_step, ax.step());

  std::vector<std::pair<Vec, double>> refined;
  for (long c : candidates) {
    Vec y = point_at(axes, c);
    double v = values[c];
    if (grid.refine) {
      if (auto polished = newton_polish(prob, x, y, refine_box, 10.0 * max_step + 1e-6)) {
        const double pv = evaluate(prob.f, EvalPoint{x, *polished});
        if (pv <= v + 1e-9) {
          y = *polished;
          v = pv;
        }
      }
    }
    refined.emplace_back(std::move(y), v);
  }

  double best_value = refined.front().second;
  for (const auto& [y, v] : refined) best_value = std::min(best_value, v);

  std::vector<Vec> keep;
  for (const auto& [y, v] : refined)
    if (v <= best_value + grid.tie_tol) keep.push_back(y);
  keep = merge_close(std::move(keep), grid.merge_radius);

  SolutionSample out;
  out.x = x;
  out.minimizers = std::move(keep);
  out.value = best_value;
  out.method = grid.refine ? "grid+newton" : "grid";
  for (const Vec& y : out.minimizers) {
    for (int i = 0; i < m; ++i) {
      const double h = std::max(axes[i].step(), 1e-9);
      const bool lo_is_window = axes[i].lo > prob.Y.lower(i) + 1e-12;
      const bool hi_is_window = axes[i].hi < prob.Y.upper(i) - 1e-12;
      if (lo_is_window && y(i) - axes[i].lo <= h) out.boundary_flag = true;
      if (hi_is_window && axes[i].hi - y(i) <= h) out.boundary_flag = true;
    }
  }
  return out;
}

StationarySample stationary_set(const BilevelProblem& prob, const Vec& x,
                                const GridSpec& grid, const std::optional<Vec>& ball_center,
                                double ball_radius) {
  if (x.size() != prob.n) throw DimensionError("x dimension mismatch");
  const std::vector<Axis> axes = build_axes(prob, grid);
  const int m = prob.m;
  std::vector<Vec> found;

  if (m == 1) {
    const Axis& ax = axes[0];
    auto g1 = [&](double y) {
      return derivative_single(prob.f, EvalPoint{x, Vec::Constant(1, y)}, prob.n);
    };
    std::vector<double> g(ax.count);
    for (int k = 0; k < ax.count; ++k) g[k] = g1(ax.at(k));
    for (int k = 0; k + 1 < ax.count; ++k) {
      const bool crossing = (g[k] <= 0 && g[k + 1] >= 0) || (g[k] >= 0 && g[k + 1] <= 0);
      if (!crossing) continue;
      double a = ax.at(k), b = ax.at(k + 1), ga = g[k];
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g1(mid);
        if ((gm <= 0) == (ga <= 0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      Vec root = Vec::Constant(1, 0.5 * (a + b));
      if (auto p = newton_polish(prob, x, root, prob.Y, 10.0 * ax.step() + 1e-6)) root = *p;
      found.push_back(root);
    }
    // interval endpoints inside the window can be box-stationary
    for (int side = 0; side < 2; ++side) {
      const double bound = side == 0 ? prob.Y.lower(0) : prob.Y.upper(0);
      if (!std::isfinite(bound) || bound < ax.lo - 1e-12 || bound > ax.hi + 1e-12) continue;
      const double gb = g1(bound);
      if ((side == 0 && gb >= 0) || (side == 1 && gb <= 0))
        found.push_back(Vec::Constant(1, bound));
    }
  } else {
    const long total = total_points(axes);
    std::vector<double> residual(total);
    for (long c = 0; c < total; ++c)
      residual[c] = box_stationarity_residual(prob, x, point_at(axes, c));
    double max_step = 0.0;
    for (const auto& ax : axes) max_step = std::max(max_step, ax.step());
    for (long c = 0; c < total; ++c) {
      bool local_min = true;
      long stride = 1;
      for (int i = 0; i < m && local_min; ++i) {
        const long k = (c / stride) % axes[i].count;
        if (k > 0 && residual[c - stride] < residual[c]) local_min = false;
        if (k + 1 < axes[i].count && residual[c + stride] < residual[c]) local_min = false;
        stride *= axes[i].count;
      }
      if (!local_min) continue;
      Vec y = point_at(axes, c);
      if (auto p = newton_polish(prob, x, y, prob.Y, 5.0 * max_step + 1e-6)) y = *p;
      found.push_back(y);
    }
  }

  // keep only Y-stationary points at the residual target, inside the ball
  std::vector<Vec> kept;
  for (const Vec& y : found) {
    if (box_stationarity_residual(prob, x, y) > 1e-9) continue;
    if (ball_center && (y - *ball_center).norm() > ball_radius) continue;
    kept.push_back(y);
  }
  kept = merge_close(std::move(kept), grid.merge_radius);

  StationarySample out;
  out.x = x;
  for (const Vec& y : kept)
    out.stationary_points.push_back({y, box_stationarity_residual(prob, x, y)});
  out.ball_center = ball_center;
  out.ball_radius = ball_radius;
  return out;
}

std::vector<SolutionSample> value_function(const BilevelProblem& prob,
                                           const std::vector<Vec>& xs,
                                           const GridSpec& grid) {
  std::vector<SolutionSample> out;
  out.reserve(xs.size());
  for (const Vec& x : xs) out.push_back(solve_lower(prob, x, grid));
  return out;
}

std::vector<Vec> directional_solution_set(const BilevelProblem& prob, const Vec& x_bar,
                                          const Direction& u, const SamplingSchedule& sched,
                                          const GridSpec& grid, double cluster_radius) {
  if (x_bar.size() != prob.n) throw DimensionError("x dimension mismatch");
  if (sched.t_values.empty()) throw InvalidArgument("empty sampling schedule");
  std::vector<Vec> dirs = sched.perturbations;
  if (dirs.empty()) dirs.push_back(u.d);

  // the cluster points that persist at the smallest sampled t
  std::vector<Vec> tail_points;
  const double t_min = sched.t_values.back();
  for (const Vec& d : dirs) {
    const SolutionSample s = solve_lower(prob, x_bar + t_min * d, grid);
    for (const Vec& y : s.minimizers) tail_points.push_back(y);
  }
  return merge_close(std::move(tail_points), cluster_radius);
}

LocalizationTrack localization_track(const BilevelProblem& prob, const Vec& x_bar,
                                     const Vec& y_bar, const Direction& u,
                                     const SamplingSchedule& sched, double ball_radius,
                                     const GridSpec& grid) {
  LocalizationTrack track;
  track.single_valued = true;

  GridSpec local = grid;
  if (!local.window_lo) {
    local = GridSpec::around(y_bar, ball_radius * 1.5, grid.resolution);
    if (local.resolution == 0) local.resolution = 2001;
  }

  for (double t : sched.t_values) {
    LocalizationTrack::Entry e;
    e.t = t;
    e.x = x_bar + t * u.d;
    const StationarySample s = stationary_set(prob, e.x, local, y_bar, ball_radius);
    for (const auto& p : s.stationary_points) e.points.push_back(p.y);
    if (e.points.empty()) track.track_lost = true;
    if (e.points.size() != 1) track.single_valued = false;
    track.entries.push_back(std::move(e));
  }

  double lip = 0.0;
  for (size_t i = 0; i + 1 < track.entries.size(); ++i) {
    const auto& a = track.entries[i];
    const auto& b = track.entries[i + 1];
    if (a.points.size() == 1 && b.points.size() == 1) {
      const double dx = (a.x - b.x).norm();
      if (dx > 0) lip = std::max(lip, (a.points[0] - b.points[0]).norm() / dx);
    }
  }
  track.lipschitz_estimate = lip;
  return track;
}

}  // namespace bdfoa
