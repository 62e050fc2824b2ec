#pragma once

#include <optional>
#include <string>

#include "bdfoa/kkt.hpp"
#include "bdfoa/lower.hpp"

namespace bdfoa {

/// Sampled check of S_FO(x) n B(y,eps_y) = S(x) n B(y,eps_y) != {} over
/// the directional neighborhood x + V_{eps_x,delta}(u).
struct EquivalenceReport {
  EvalPoint point;
  Vec u;
  double eps_x = 0.0, eps_y = 0.0, delta = 0.0;
  int sample_count = 0;
  bool verdict = false;
  std::optional<Vec> worst_x;  // sample where the set equality broke
  double worst_hausdorff = 0.0;
  std::string detail;
};

/// Search of the SCOP-feasible set near the point for F below F(point):
/// a witness demonstrates failure of the classical first-order approach.
struct FoaFailureReport {
  EvalPoint point;
  double radius = 0.0;  // bound on the lower-variable displacement
  bool failure_found = false;
  std::optional<EvalPoint> witness;
  double margin = 0.0;            // F(point) - F(witness), > 0 on failure
  double witness_residual = 0.0;  // lower-level stationarity residual
  bool branch_fold = false;       // continuation lost the branch somewhere
};

/// Sampled bilevel local optimality over a full or directional
/// x-neighborhood, with lower responses filtered to a ball around y-bar.
struct NbhdSpec {
  double x_radius = 0.05;
  double y_radius = 0.4;
  std::optional<Direction> direction;  // directional sampling when set
  double delta = 0.5;
  int min_samples = 10000;
};

struct LocalMinReport {
  bool verdict = false;
  int samples = 0;
  double worst_violation = 0.0;  // max(F(point) - F(x,y*), 0) over samples
  std::optional<EvalPoint> worst_point;
};

EquivalenceReport verify_equivalence(const BilevelProblem& prob, const EvalPoint& point,
                                     const Direction& u, double eps_x, double eps_y,
                                     double delta, const SamplingSchedule& sched,
                                     const GridSpec& grid = {});

/// Directions inside the delta-cap around u (16 by default, fewer in 1-D),
/// for the sampling loops of the verifiers.
std::vector<Vec> cap_directions(const Direction& u, double delta, int count, int dim);

FoaFailureReport detect_classical_foa_failure(const BilevelProblem& prob,
                                              const EvalPoint& point, double radius,
                                              const GridSpec& grid = {});

LocalMinReport verify_bilevel_local_min(const BilevelProblem& prob, const EvalPoint& point,
                                        const NbhdSpec& nbhd, const GridSpec& grid = {});

}  // namespace bdfoa
