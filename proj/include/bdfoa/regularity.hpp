#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdfoa/lower.hpp"

namespace bdfoa {

enum class Verdict { Holds, Fails, NotApplicable };

const char* verdict_name(Verdict v);

/// Outcome of a single sufficient condition with its witness data.
struct ConditionReport {
  Verdict verdict = Verdict::NotApplicable;
  double value = 0.0;  // min singular value / mu / worst curvature
  std::optional<Vec> worst_direction;
  bool pointwise_only = false;
  std::string note;
};

/// The single-valued-localization checks: interior nonsingularity,
/// strong monotonicity over span(Y - Y), second-order sufficiency over the
/// critical cone, and the mixed second-order condition.
struct LocalizationReport {
  ConditionReport interior_nonsingular;
  ConditionReport strong_monotonicity;
  ConditionReport sosc;
  ConditionReport mixed_second_order;

  bool certified() const {
    return interior_nonsingular.verdict == Verdict::Holds ||
           strong_monotonicity.verdict == Verdict::Holds ||
           sosc.verdict == Verdict::Holds || mixed_second_order.verdict == Verdict::Holds;
  }
};

/// Open cone of admissible directions {u : <n_y, u> > 0 for every
/// competing minimizer y}, with n_y = grad_x f(x,y) - grad_x f(x,ybar).
struct DirectionCone {
  std::vector<Vec> normals;          // one strict halfspace per competitor
  std::vector<Vec> competitors;      // the competing minimizers, same order
  bool full_space = false;           // S(x) was a singleton
  bool empty = false;                // strict system infeasible (at search scale)
  std::optional<Vec> witness_direction;  // best interior direction found
  double witness_slack = 0.0;

  bool contains(const Vec& u, double slack = 1e-8) const;
};

/// Heuristic inf-compactness evidence: sampled sublevel sets near x must
/// stay inside the window with a positive margin. Never a proof.
struct InfCompactnessEvidence {
  bool holds = false;
  double alpha = 0.0;
  double min_margin = 0.0;  // distance of sublevel samples to the window edge
  Vec worst_x;
  std::string note;
};

/// Empirical directional inner semicontinuity along a schedule.
struct InnerSemicontEmpirical {
  bool holds = false;
  double final_distance = 0.0;
  double max_distance = 0.0;
  std::vector<std::pair<double, double>> trace;  // (t, dist(ybar, S(x+t d)))
};

/// S(x-bar) enumeration with the admissible cone and evidence fields.
struct InnerSemicontReport {
  std::vector<Vec> solution_set;
  bool singleton = false;
  DirectionCone admissible;
  InfCompactnessEvidence inf_compactness;
};

/// Interior point + nonsingular Hessian of f in y.
ConditionReport check_interior_nonsingular(const BilevelProblem& prob, const EvalPoint& p);

/// mu > 0 with <w, H w> >= mu |w|^2 on span(Y - Y) (pointwise Hessian).
ConditionReport check_strong_monotonicity(const BilevelProblem& prob, const EvalPoint& p);

/// Positive curvature over the critical cone, exact via face/eigenpair
/// enumeration at m <= 3.
ConditionReport check_sosc_box(const BilevelProblem& prob, const EvalPoint& p);

/// No nonzero w in K with -H w in N_K(w), by face enumeration.
ConditionReport check_condition_ivb(const BilevelProblem& prob, const EvalPoint& p);

/// All four checks bundled.
LocalizationReport check_localization(const BilevelProblem& prob, const EvalPoint& p);

/// Enumerates S(x-bar) and builds the strict direction cone of the
/// directional-derivative inequality.
DirectionCone admissible_directions(const BilevelProblem& prob, const Vec& x_bar,
                                    const Vec& y_bar, const GridSpec& grid = {});

InfCompactnessEvidence check_inf_compactness(const BilevelProblem& prob, const Vec& x_bar,
                                             const GridSpec& window = {},
                                             double level_margin = 0.5);

InnerSemicontEmpirical check_inner_semicontinuity_empirical(
    const BilevelProblem& prob, const Vec& x_bar, const Vec& y_bar, const Direction& u,
    const SamplingSchedule& sched, const GridSpec& grid = {});

InnerSemicontReport inner_semicontinuity_report(const BilevelProblem& prob, const Vec& x_bar,
                                                const Vec& y_bar, const GridSpec& grid = {});

}  // namespace bdfoa
