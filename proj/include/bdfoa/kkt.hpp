#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdfoa/geometry.hpp"
#include "bdfoa/problems.hpp"

namespace bdfoa {

enum class CqKind { Nnamcq, Foscms, AffinePolyhedral, Assumed };

const char* cq_name(CqKind k);

/// Outcome of a constraint-qualification check. A failing verdict carries
/// a unit-norm violating multiplier with adjoint residual <= 1e-8.
struct CqEvidence {
  CqKind kind = CqKind::Assumed;
  bool verdict = false;
  std::optional<Vec> violating;  // (mu, nu, beta) stacked, ||.|| = 1
  double violation_residual = 0.0;
  int pieces_examined = 0;
  std::optional<Vec> direction;  // (u, v) for the directional check
  std::string note;
};

/// Directional KKT certificate at (x,y) in direction (u,v).
struct KktCertificate {
  EvalPoint point;
  Vec u, v;
  Vec mu, nu, beta;            // beta has length q (zeros off the active set)
  std::vector<int> active_set;
  double stationarity_residual = 0.0;  // inf-norm over the n+m rows
  double comp_residual_G = 0.0;        // |beta . G|
  double comp_residual_dG = 0.0;       // |beta . grad G (u,v)|
  int piece_index = -1;
  std::vector<int> passing_pieces;
  CqEvidence cq;
};

struct CertifyResult {
  bool found = false;
  KktCertificate certificate;  // best piece found (valid when `found`)
  double best_residual = kInf;
};

/// Membership data of a direction in the linearized cone L(x,y).
struct LinearizedConeCheck {
  bool in_cone = false;
  std::vector<int> active_set;
  Vec transformed;  // (v, -grad(grad_y f)(u,v)), the graph-space direction
};

/// Jacobian of (x,y) -> (y, -grad_y f(x,y)) stacked with the rows of
/// grad G: a (2m+q) x (n+m) matrix [[0, I], [-f_yx, -f_yy], [grad G]].
Mat constraint_jacobian(const BilevelProblem& prob, const EvalPoint& p);

/// Is the point feasible for the SCOP system (G <= 0 and (y, -grad_y f)
/// on gph N_Y)?
bool scop_feasible(const BilevelProblem& prob, const EvalPoint& p, double tol = 1e-9);

LinearizedConeCheck linearized_cone_contains(const BilevelProblem& prob, const EvalPoint& p,
                                             const Vec& u, const Vec& v);

/// Critical direction v for a given u: grad F (u,v) = 0 and (u,v) in L.
/// Interior case uses v = -f_yy^{-1} f_yx u; boundary cases search the
/// tangent pieces. Returns nullopt when no piece admits a solution.
std::optional<Vec> find_critical_direction(const BilevelProblem& prob, const EvalPoint& p,
                                           const Vec& u);

/// No nonzero ((mu,nu),beta) solves the homogeneous adjoint system with
/// (mu,nu) in the limiting graph normal cone and beta >= 0 on the active set.
CqEvidence check_nnamcq(const BilevelProblem& prob, const EvalPoint& p);

/// Directional refinement: the graph normal cone is taken in direction
/// (v, -grad(grad_y f)(u,v)) and beta is restricted by beta _|_ grad G(u,v).
CqEvidence check_foscms(const BilevelProblem& prob, const EvalPoint& p, const Vec& u,
                        const Vec& v);

/// f quadratic and G affine (and Y a box): metric subregularity is
/// automatic for the polyhedral system.
bool detect_affine_polyhedral(const BilevelProblem& prob);
CqEvidence affine_polyhedral_evidence(const BilevelProblem& prob);

CqEvidence assumed_cq(const std::string& why);

/// Searches the directional-normal-cone pieces for multipliers solving
/// the stationarity system at residual <= 1e-6.
CertifyResult certify_directional_kkt(const BilevelProblem& prob, const EvalPoint& p,
                                      const Vec& u, const Vec& v, const CqEvidence& cq);

/// Interior specialization: mu = 0 and the single piece {0}^m x R^m.
/// The CQ (FOSCMS, falling back to NNAMCQ) is checked internally.
CertifyResult certify_interior(const BilevelProblem& prob, const EvalPoint& p, const Vec& u,
                               const Vec& v);

}  // namespace bdfoa
