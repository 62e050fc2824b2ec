#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdfoa/geometry.hpp"
#include "bdfoa/problems.hpp"

namespace bdfoa {

/// Sampling window and refinement policy for the grid oracles.
struct GridSpec {
  std::optional<Vec> window_lo, window_hi;  // default [-10, 10]^m
  int resolution = 0;                       // 0 = auto: 4001 / 401 / 101 by m
  bool refine = true;
  double tie_tol = 1e-9;
  double merge_radius = 1e-6;

  static GridSpec defaults() { return {}; }
  /// Narrow window around a center (intersected with the default window).
  static GridSpec around(const Vec& center, double radius, int resolution = 0);
};

/// Brute-force estimate of S(x) over the sampling window.
struct SolutionSample {
  Vec x;
  std::vector<Vec> minimizers;  // lexicographically sorted
  double value = 0.0;           // V(x), window-relative
  bool boundary_flag = false;   // argmin touches the sampling window
  std::string method;
};

struct StationaryPoint {
  Vec y;
  double residual = 0.0;  // box-stationarity residual
};

/// Estimate of S_FO(x) over the window (optionally within a ball).
struct StationarySample {
  Vec x;
  std::vector<StationaryPoint> stationary_points;
  std::optional<Vec> ball_center;
  double ball_radius = 0.0;
};

/// t_k down to 0 with direction perturbations inside the delta-cap.
struct SamplingSchedule {
  std::vector<double> t_values;        // strictly decreasing
  std::vector<Vec> perturbations;      // unit directions near d (may be empty)

  static SamplingSchedule dyadic(int k_max = 20);
  /// t-grid covering (0, eps) linearly plus a dyadic tail, `count` values.
  static SamplingSchedule covering(double eps, int count);
};

/// Localization ball track of S_FO(x-bar + t u) with an empirical
/// Lipschitz ratio.
struct LocalizationTrack {
  struct Entry {
    double t = 0.0;
    Vec x;
    std::vector<Vec> points;  // stationary points inside the ball
  };
  std::vector<Entry> entries;
  bool single_valued = false;  // exactly one point at every t
  bool track_lost = false;     // some t had no stationary point in the ball
  double lipschitz_estimate = 0.0;
};

/// Componentwise box-stationarity residual ||y - proj_Y(y - grad_y f)||_inf.
double box_stationarity_residual(const BilevelProblem& prob, const Vec& x, const Vec& y);

/// Global argmin set of f(x, .) over the window (grid scan + projected
/// Newton polish); minimizers within tie_tol of the best value.
SolutionSample solve_lower(const BilevelProblem& prob, const Vec& x,
                           const GridSpec& grid = {});

/// All box-stationary points in the window: sign-change bracketing for
/// m = 1, residual-grid + Newton for m >= 2. Residuals <= 1e-9 after
/// refinement.
StationarySample stationary_set(const BilevelProblem& prob, const Vec& x,
                                const GridSpec& grid = {},
                                const std::optional<Vec>& ball_center = std::nullopt,
                                double ball_radius = 0.0);

/// V(x) table via solve_lower.
std::vector<SolutionSample> value_function(const BilevelProblem& prob,
                                           const std::vector<Vec>& xs,
                                           const GridSpec& grid = {});

/// Cluster points of S(x-bar + t_k d') as t_k goes to 0 (directional outer
/// limit of the solution map), clustered at `cluster_radius`.
std::vector<Vec> directional_solution_set(const BilevelProblem& prob, const Vec& x_bar,
                                          const Direction& u, const SamplingSchedule& sched,
                                          const GridSpec& grid = {},
                                          double cluster_radius = 1e-3);

/// Tracks S_FO(x-bar + t u) inside B(y-bar, ball_radius) along the schedule.
LocalizationTrack localization_track(const BilevelProblem& prob, const Vec& x_bar,
                                     const Vec& y_bar, const Direction& u,
                                     const SamplingSchedule& sched, double ball_radius,
                                     const GridSpec& grid = {});

}  // namespace bdfoa
