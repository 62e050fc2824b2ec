#include "bdfoa/kkt.hpp"

#include <algorithm>
#include <cmath>

namespace bdfoa {

const char* cq_name(CqKind k) {
  switch (k) {
    case CqKind::Nnamcq: return "NNAMCQ";
    case CqKind::Foscms: return "FOSCMS";
    case CqKind::AffinePolyhedral: return "affine+polyhedral";
    case CqKind::Assumed: return "assumed";
  }
  return "?";
}

namespace {

constexpr double kActiveTol = 1e-9;
constexpr double kGraphTol = 1e-9;

struct PointData {
  Vec gF;       // grad F, length n+m
  Vec g_y;      // grad_y f, length m
  Vec xi;       // -grad_y f
  Mat J_phi;    // Jacobian of (y, -grad_y f), 2m x (n+m)
  Mat f_yx;     // m x n
  Mat f_yy;     // m x m
  std::vector<double> G_values;
  std::vector<Vec> G_grads;  // length n+m each
  std::vector<int> active;
};

PointData analyze(const BilevelProblem& prob, const EvalPoint& p) {
  PointData d;
  const Derivatives dF = differentiate(prob.F, p);
  const Derivatives df = differentiate(prob.f, p);
  const int n = prob.n, m = prob.m;
  d.gF = dF.gradient;
  d.g_y = df.gradient.segment(n, m);
  d.xi = -d.g_y;
  d.f_yx = df.hessian.block(n, 0, m, n);
  d.f_yy = df.hessian.block(n, n, m, m);
  d.J_phi = Mat::Zero(2 * m, n + m);
  d.J_phi.block(0, n, m, m) = Mat::Identity(m, m);
  d.J_phi.block(m, 0, m, n + m) = -df.hessian.block(n, 0, m, n + m);
  for (int i = 0; i < prob.q(); ++i) {
    const Derivatives dg = differentiate(prob.G[i], p);
    d.G_values.push_back(dg.value);
    d.G_grads.push_back(dg.gradient);
    if (std::abs(dg.value) <= kActiveTol) d.active.push_back(i);
  }
  return d;
}

Vec stack_uv(const Vec& u, const Vec& v) {
  Vec uv(u.size() + v.size());
  uv << u, v;
  return uv;
}

bool on_box_graph(const BilevelProblem& prob, const Vec& y, const Vec& xi, double tol) {
  for (int i = 0; i < prob.m; ++i)
    if (!on_interval_graph(prob.Y.lower(i), prob.Y.upper(i), y(i), xi(i), tol)) return false;
  return true;
}

// Lifts a cone over (mu, nu) in R^{2m} to the multiplier space
// z = (mu, nu, beta_S) in R^{2m + |S|}.
void lift_piece(const PolyConeRep& piece, int extra, std::vector<Vec>& halfspaces,
                std::vector<Vec>& equalities) {
  const int D = piece.dim + extra;
  auto lift = [&](const Vec& r) {
    Vec out = Vec::Zero(D);
    out.head(piece.dim) = r;
    return out;
  };
  for (const Vec& a : piece.halfspaces) halfspaces.push_back(lift(a));
  for (const Vec& e : piece.equalities) equalities.push_back(lift(e));
}

// Columns of the adjoint map z = (mu, nu, beta_S) |-> J_phi^T (mu,nu) +
// sum beta_i grad G_i, an (n+m) x D matrix.
Mat adjoint_matrix(const PointData& d, const std::vector<int>& support, int n_plus_m) {
  const int D = static_cast<int>(d.J_phi.rows()) + static_cast<int>(support.size());
  Mat A(n_plus_m, D);
  A.leftCols(d.J_phi.rows()) = d.J_phi.transpose();
  for (size_t s = 0; s < support.size(); ++s)
    A.col(d.J_phi.rows() + static_cast<int>(s)) = d.G_grads[support[s]];
  return A;
}

// Homogeneous feasibility: does {A z = 0, z in piece x R_+^{|S|}} contain a
// nonzero element? Returns it (unit norm) if so.
std::optional<Vec> nonzero_multiplier(const PointData& d, const PolyConeRep& piece,
                                      const std::vector<int>& support, int n_plus_m) {
  const int D = piece.dim + static_cast<int>(support.size());
  std::vector<Vec> halfspaces, equalities;
  lift_piece(piece, static_cast<int>(support.size()), halfspaces, equalities);
  for (size_t s = 0; s < support.size(); ++s) {
    Vec h = Vec::Zero(D);
    h(piece.dim + static_cast<int>(s)) = -1.0;  // beta_s >= 0
    halfspaces.push_back(h);
  }
  const Mat A = adjoint_matrix(d, support, n_plus_m);
  for (int r = 0; r < A.rows(); ++r) {
    Vec e = A.row(r).transpose();
    if (e.norm() > 1e-14) equalities.push_back(e);
  }
  const PolyConeRep sol = PolyConeRep::from_halfspaces(D, halfspaces, equalities);
  for (const Vec& g : sol.generators)
    if (g.norm() > 1e-9) return g / g.norm();
  return std::nullopt;
}

// Expands a multiplier over `support` back to (mu, nu, beta in R^q).
Vec expand_multiplier(const Vec& z, int two_m, const std::vector<int>& support, int q) {
  Vec full = Vec::Zero(two_m + q);
  full.head(two_m) = z.head(two_m);
  for (size_t s = 0; s < support.size(); ++s)
    full(two_m + support[s]) = z(two_m + static_cast<int>(s));
  return full;
}

// Equality-constrained least squares min ||A z + b|| s.t. <e, z> = 0 for all
// rows e, via the null-space method.
struct EclsResult {
  Vec z;
  double residual_inf;
};

std::optional<EclsResult> solve_ecls(const Mat& A, const Vec& b,
                                     const std::vector<Vec>& equalities) {
  const int D = static_cast<int>(A.cols());
  Mat E(equalities.size(), D);
  for (size_t i = 0; i < equalities.size(); ++i) E.row(static_cast<int>(i)) = equalities[i];
  Mat K;
  if (equalities.empty()) {
    K = Mat::Identity(D, D);
  } else {
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thresh = std::max(1e-12, sv.size() > 0 ? sv(0) * 1e-10 : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > thresh) ++rank;
    if (rank == D) {  // only z = 0 is feasible
      EclsResult r;
      r.z = Vec::Zero(D);
      r.residual_inf = b.cwiseAbs().maxCoeff();
      return r;
    }
    K = svd.matrixV().rightCols(D - rank);
  }
  const Vec c = (A * K).bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-b);
  EclsResult r;
  r.z = K * c;
  if (!r.z.allFinite()) return std::nullopt;
  r.residual_inf = (A * r.z + b).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace

Mat constraint_jacobian(const BilevelProblem& prob, const EvalPoint& p) {
  const PointData d = analyze(prob, p);
  Mat J(2 * prob.m + prob.q(), prob.n + prob.m);
  J.topRows(2 * prob.m) = d.J_phi;
  for (int i = 0; i < prob.q(); ++i) J.row(2 * prob.m + i) = d.G_grads[i].transpose();
  return J;
}

bool scop_feasible(const BilevelProblem& prob, const EvalPoint& p, double tol) {
  for (const auto& g : prob.G)
    if (evaluate(g, p) > tol) return false;
  const Vec g_y = differentiate(prob.f, p).gradient.segment(prob.n, prob.m);
  return on_box_graph(prob, p.y, -g_y, tol);
}

LinearizedConeCheck linearized_cone_contains(const BilevelProblem& prob, const EvalPoint& p,
                                             const Vec& u, const Vec& v) {
  if (u.size() != prob.n || v.size() != prob.m) throw DimensionError("direction mismatch");
  if (!scop_feasible(prob, p, kGraphTol))
    throw InvalidArgument("point is not feasible for the SCOP system");
  const PointData d = analyze(prob, p);
  LinearizedConeCheck out;
  out.active_set = d.active;
  out.transformed = Vec(2 * prob.m);
  out.transformed.head(prob.m) = v;
  out.transformed.tail(prob.m) = -(d.f_yx * u + d.f_yy * v);

  const double scale = std::max(1.0, stack_uv(u, v).norm());
  for (int i : d.active)
    if (d.G_grads[i].dot(stack_uv(u, v)) > 1e-10 * scale) return out;

  const ConeUnion tangent = graph_tangent_box(prob.Y, p.y, d.xi, kGraphTol);
  out.in_cone = tangent.contains(out.transformed, 1e-10);
  return out;
}

std::optional<Vec> find_critical_direction(const BilevelProblem& prob, const EvalPoint& p,
                                           const Vec& u) {
  const PointData d = analyze(prob, p);
  const int m = prob.m;

  // interior case: gph N_Y is locally R^m x {0}, v solves f_yx u + f_yy v = 0
  bool interior = true;
  for (int i = 0; i < m; ++i) {
    if (std::isfinite(prob.Y.lower(i)) && p.y(i) - prob.Y.lower(i) <= 1e-9) interior = false;
    if (std::isfinite(prob.Y.upper(i)) && prob.Y.upper(i) - p.y(i) <= 1e-9) interior = false;
  }
  if (interior) {
    const Eigen::FullPivLU<Mat> lu(d.f_yy);
    if (!lu.isInvertible())
      throw Error("singular lower-level Hessian in the interior critical-direction formula");
    const Vec v = lu.solve(-(d.f_yx * u));
    if (std::abs(d.gF.dot(stack_uv(u, v))) > 1e-8) return std::nullopt;
    if (!linearized_cone_contains(prob, p, u, v).in_cone) return std::nullopt;
    return v;
  }

  // boundary case: per tangent piece solve the linear system for v
  const ConeUnion tangent = graph_tangent_box(prob.Y, p.y, d.xi, kGraphTol);
  for (const PolyConeRep& piece : tangent.pieces) {
    // unknown v; w(v) = (v, -(f_yx u + f_yy v)) must satisfy the piece
    // equalities, grad F (u,v) = 0, and the piece halfspaces.
    Mat W(2 * m, m);  // w(v) = W v + w0
    W.topRows(m) = Mat::Identity(m, m);
    W.bottomRows(m) = -d.f_yy;
    Vec w0 = Vec::Zero(2 * m);
    w0.tail(m) = -(d.f_yx * u);

    std::vector<Vec> eq_rows;  // rows r, constants c with <r, v> + c = 0
    std::vector<double> eq_consts;
    for (const Vec& e : piece.equalities) {
      eq_rows.push_back(W.transpose() * e);
      eq_consts.push_back(e.dot(w0));
    }
    eq_rows.push_back(d.gF.tail(m));
    eq_consts.push_back(d.gF.head(prob.n).dot(u));

    Mat E(eq_rows.size(), m);
    Vec c(eq_rows.size());
    for (size_t i = 0; i < eq_rows.size(); ++i) {
      E.row(static_cast<int>(i)) = eq_rows[i];
      c(static_cast<int>(i)) = eq_consts[i];
    }
    const Vec v0 = E.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-c);
    if (!v0.allFinite()) continue;
    if ((E * v0 + c).cwiseAbs().maxCoeff() > 1e-9) continue;

    auto acceptable = [&](const Vec& v) {
      if (std::abs(d.gF.dot(stack_uv(u, v))) > 1e-8) return false;
      const auto check = linearized_cone_contains(prob, p, u, v);
      return check.in_cone;
    };
    if (acceptable(v0)) return v0;

    // search the equality null space for an inequality-feasible solution
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > std::max(1e-12, sv(0) * 1e-10)) ++rank;
    const Mat N = svd.matrixV().rightCols(m - rank);
    if (N.cols() > 0) {
      const int steps = 21;
      std::vector<Vec> offsets;
      if (N.cols() == 1) {
        for (int a = -steps; a <= steps; ++a)
          offsets.push_back(N.col(0) * (0.2 * a));
      } else {
        for (int a = -10; a <= 10; ++a)
          for (int b = -10; b <= 10; ++b)
            offsets.push_back(N.col(0) * (0.4 * a) + N.col(1) * (0.4 * b));
      }
      for (const Vec& off : offsets)
        if (acceptable(v0 + off)) return v0 + off;
    }
  }
  return std::nullopt;
}

CqEvidence check_nnamcq(const BilevelProblem& prob, const EvalPoint& p) {
  if (!scop_feasible(prob, p, kGraphTol))
    throw InvalidArgument("point is not feasible for the SCOP system");
  const PointData d = analyze(prob, p);
  CqEvidence ev;
  ev.kind = CqKind::Nnamcq;
  const ConeUnion pieces = graph_normal_box(prob.Y, p.y, d.xi, std::nullopt, kGraphTol);
  for (const PolyConeRep& piece : pieces.pieces) {
    ++ev.pieces_examined;
    if (auto z = nonzero_multiplier(d, piece, d.active, prob.n + prob.m)) {
      ev.verdict = false;
      ev.violating = expand_multiplier(*z, 2 * prob.m, d.active, prob.q());
      const Mat A = adjoint_matrix(d, d.active, prob.n + prob.m);
      ev.violation_residual = (A * *z).cwiseAbs().maxCoeff();
      return ev;
    }
  }
  ev.verdict = true;
  return ev;
}

CqEvidence check_foscms(const BilevelProblem& prob, const EvalPoint& p, const Vec& u,
                        const Vec& v) {
  const LinearizedConeCheck lin = linearized_cone_contains(prob, p, u, v);
  if (!lin.in_cone)
    throw InvalidArgument("direction (u,v) is not in the linearized cone");
  const PointData d = analyze(prob, p);
  CqEvidence ev;
  ev.kind = CqKind::Foscms;
  ev.direction = stack_uv(u, v);

  // directional polarity restricts beta to the directionally active rows
  std::vector<int> support;
  for (int i : d.active)
    if (std::abs(d.G_grads[i].dot(stack_uv(u, v))) <= 1e-10) support.push_back(i);

  const ConeUnion pieces =
      graph_normal_box(prob.Y, p.y, d.xi, std::optional<Vec>(lin.transformed), kGraphTol);
  for (const PolyConeRep& piece : pieces.pieces) {
    ++ev.pieces_examined;
    if (auto z = nonzero_multiplier(d, piece, support, prob.n + prob.m)) {
      ev.verdict = false;
      ev.violating = expand_multiplier(*z, 2 * prob.m, support, prob.q());
      const Mat A = adjoint_matrix(d, support, prob.n + prob.m);
      ev.violation_residual = (A * *z).cwiseAbs().maxCoeff();
      return ev;
    }
  }
  ev.verdict = true;
  return ev;
}

bool detect_affine_polyhedral(const BilevelProblem& prob) {
  const int deg_f = polynomial_degree(prob.f);
  if (deg_f < 0 || deg_f > 2) return false;
  for (const auto& g : prob.G) {
    const int dg = polynomial_degree(g);
    if (dg < 0 || dg > 1) return false;
  }
  return true;  // Y is always a box in this model
}

CqEvidence affine_polyhedral_evidence(const BilevelProblem& prob) {
  CqEvidence ev;
  ev.kind = CqKind::AffinePolyhedral;
  ev.verdict = detect_affine_polyhedral(prob);
  ev.note = ev.verdict ? "f quadratic, G affine, Y a box: metric subregularity is automatic"
                       : "system is not affine+polyhedral";
  return ev;
}

CqEvidence assumed_cq(const std::string& why) {
  CqEvidence ev;
  ev.kind = CqKind::Assumed;
  ev.verdict = true;
  ev.note = "CQ assumed by caller: " + why;
  return ev;
}

namespace {

// Constrained least squares over one normal-cone piece by exhaustive
// active-set enumeration (desk dimensions).
struct PieceFit {
  Vec z;
  double residual = kInf;
  bool feasible = false;
};

PieceFit fit_piece(const PointData& d, const PolyConeRep& piece,
                   const std::vector<int>& support, const Vec& b, int n_plus_m) {
  const int D = piece.dim + static_cast<int>(support.size());
  std::vector<Vec> halfspaces, equalities;
  lift_piece(piece, static_cast<int>(support.size()), halfspaces, equalities);
  for (size_t s = 0; s < support.size(); ++s) {
    Vec h = Vec::Zero(D);
    h(piece.dim + static_cast<int>(s)) = -1.0;
    halfspaces.push_back(h);
  }
  const Mat A = adjoint_matrix(d, support, n_plus_m);

  PieceFit best;
  const size_t nh = halfspaces.size();
  if (nh > 16) throw InvalidArgument("active-set enumeration limited to 16 inequalities");
  for (size_t mask = 0; mask < (size_t{1} << nh); ++mask) {
    std::vector<Vec> eqs = equalities;
    for (size_t i = 0; i < nh; ++i)
      if (mask & (size_t{1} << i)) eqs.push_back(halfspaces[i]);
    const auto sol = solve_ecls(A, b, eqs);
    if (!sol) continue;
    bool ok = true;
    for (size_t i = 0; i < nh && ok; ++i)
      ok = halfspaces[i].dot(sol->z) <= 1e-10 * std::max(1.0, sol->z.norm());
    if (!ok) continue;
    if (sol->residual_inf < best.residual) {
      best.z = sol->z;
      best.residual = sol->residual_inf;
      best.feasible = true;
    }
  }
  return best;
}

CertifyResult certify_over_pieces(const BilevelProblem& prob, const EvalPoint& p,
                                  const Vec& u, const Vec& v, const CqEvidence& cq,
                                  const ConeUnion& pieces) {
  const PointData d = analyze(prob, p);
  const Vec uv = stack_uv(u, v);

  // beta support: active rows with zero directional derivative
  std::vector<int> support;
  for (int i : d.active)
    if (std::abs(d.G_grads[i].dot(uv)) <= 1e-10) support.push_back(i);

  CertifyResult out;
  KktCertificate cert;
  cert.point = p;
  cert.u = u;
  cert.v = v;
  cert.active_set = d.active;
  cert.cq = cq;

  // first passing piece in deterministic order wins; all passing are listed
  std::vector<int> passing;
  PieceFit chosen;
  int chosen_idx = -1;
  bool chosen_passes = false;
  for (size_t pi = 0; pi < pieces.pieces.size(); ++pi) {
    const PieceFit fit = fit_piece(d, pieces.pieces[pi], support, d.gF, prob.n + prob.m);
    if (!fit.feasible) continue;
    out.best_residual = std::min(out.best_residual, fit.residual);
    if (fit.residual <= 1e-6) {
      passing.push_back(static_cast<int>(pi));
      if (!chosen_passes) {
        chosen = fit;
        chosen_idx = static_cast<int>(pi);
        chosen_passes = true;
      }
    } else if (!chosen_passes && fit.residual < chosen.residual) {
      chosen = fit;
      chosen_idx = static_cast<int>(pi);
    }
  }
  if (chosen_idx >= 0) {
    const Vec full = expand_multiplier(chosen.z, 2 * prob.m, support, prob.q());
    cert.mu = full.head(prob.m);
    cert.nu = full.segment(prob.m, prob.m);
    cert.beta = full.tail(prob.q());
    cert.stationarity_residual = chosen.residual;
    cert.piece_index = chosen_idx;
    double compG = 0.0, compDG = 0.0;
    for (int i = 0; i < prob.q(); ++i) {
      compG += cert.beta(i) * d.G_values[i];
      compDG += cert.beta(i) * d.G_grads[i].dot(uv);
    }
    cert.comp_residual_G = std::abs(compG);
    cert.comp_residual_dG = std::abs(compDG);
  } else {
    cert.mu = Vec::Zero(prob.m);
    cert.nu = Vec::Zero(prob.m);
    cert.beta = Vec::Zero(prob.q());
    cert.stationarity_residual = kInf;
  }
  cert.passing_pieces = passing;
  out.certificate = cert;
  out.found = chosen_passes;
  return out;
}

}  // namespace

CertifyResult certify_directional_kkt(const BilevelProblem& prob, const EvalPoint& p,
                                      const Vec& u, const Vec& v, const CqEvidence& cq) {
  const LinearizedConeCheck lin = linearized_cone_contains(prob, p, u, v);
  if (!lin.in_cone) throw InvalidArgument("direction (u,v) is not in the linearized cone");
  const PointData d = analyze(prob, p);
  if (std::abs(d.gF.dot(stack_uv(u, v))) > 1e-8)
    throw InvalidArgument("(u,v) is not a critical direction: grad F (u,v) != 0");
  if (!cq.verdict) throw InvalidArgument("constraint qualification evidence is negative");

  const ConeUnion pieces =
      graph_normal_box(prob.Y, p.y, d.xi, std::optional<Vec>(lin.transformed), kGraphTol);
  return certify_over_pieces(prob, p, u, v, cq, pieces);
}

CertifyResult certify_interior(const BilevelProblem& prob, const EvalPoint& p, const Vec& u,
                               const Vec& v) {
  for (int i = 0; i < prob.m; ++i) {
    const bool near_lo =
        std::isfinite(prob.Y.lower(i)) && p.y(i) - prob.Y.lower(i) <= 1e-9;
    const bool near_hi =
        std::isfinite(prob.Y.upper(i)) && prob.Y.upper(i) - p.y(i) <= 1e-9;
    if (near_lo || near_hi)
      throw InvalidArgument("point is on the boundary of Y; use certify_directional_kkt");
  }
  CqEvidence cq = check_foscms(prob, p, u, v);
  if (!cq.verdict) {
    cq = check_nnamcq(prob, p);
    if (!cq.verdict)
      throw InvalidArgument(
          "no constraint qualification certified; use certify_directional_kkt with an "
          "assumed CQ");
  }
  // interior piece: {0}^m x R^m, independent of the direction
  PolyConeRep interior_piece;
  interior_piece.dim = 2 * prob.m;
  for (int i = 0; i < prob.m; ++i) {
    interior_piece.equalities.push_back(Vec::Unit(2 * prob.m, i));
    interior_piece.generators.push_back(Vec::Unit(2 * prob.m, prob.m + i));
    interior_piece.generators.push_back(-Vec::Unit(2 * prob.m, prob.m + i));
  }
  ConeUnion pieces;
  pieces.pieces = {interior_piece};
  return certify_over_pieces(prob, p, u, v, cq, pieces);
}

}  // namespace bdfoa
