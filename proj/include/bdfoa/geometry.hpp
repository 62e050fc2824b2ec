#pragma once

#include <optional>
#include <vector>

#include "bdfoa/box.hpp"

namespace bdfoa {

/// A direction vector; `zero` mirrors whether the vector vanishes.
struct Direction {
  Vec d;
  bool zero = true;

  Direction() = default;
  explicit Direction(Vec v) : d(std::move(v)), zero(d.norm() == 0.0) {}
  static Direction zero_dir(int dim) { return Direction(Vec::Zero(dim)); }
};

/// center + V_{eps,delta}(direction): for a zero direction the open
/// eps-ball, otherwise the cone sector {0} u {z in eps*B \ {0} :
/// || z/||z|| - d/||d|| || <= delta}.
struct DirectionalNeighborhood {
  Vec center;
  double epsilon = 0.0;
  double delta = 0.0;
  Direction direction;

  DirectionalNeighborhood(Vec c, double eps, double del, Direction dir);
};

bool nbhd_contains(const DirectionalNeighborhood& nbhd, const Vec& z);

/// Convex polyhedral cone kept in dual representation: conic hull of
/// `generators` and at the same time {z : <a,z> <= 0 for each halfspace,
/// <e,z> = 0 for each equality}. All stored rows and generators are unit
/// length. `empty_marker` distinguishes the empty set from {0}.
struct PolyConeRep {
  int dim = 0;
  bool empty_marker = false;
  std::vector<Vec> generators;
  std::vector<Vec> halfspaces;
  std::vector<Vec> equalities;

  bool contains(const Vec& z, double tol = 1e-10) const;

  static PolyConeRep empty(int dim);
  static PolyConeRep zero_cone(int dim);
  static PolyConeRep full_space(int dim);
  /// H-to-V: derives generators by extreme-ray enumeration.
  static PolyConeRep from_halfspaces(int dim, std::vector<Vec> halfspaces,
                                     std::vector<Vec> equalities);
  /// V-to-H: derives halfspaces through the polar cone.
  static PolyConeRep from_generators(int dim, std::vector<Vec> generators);

  /// Dual consistency: every generator satisfies every constraint and the
  /// two representations describe the same cone.
  bool validate(double tol = 1e-8) const;
};

/// Polar cone; both representations swap roles. Enforced at dim <= 4.
PolyConeRep polar(const PolyConeRep& c);

/// inner subset outer, via generator membership (valid for consistent reps).
bool cone_contains_cone(const PolyConeRep& inner, const PolyConeRep& outer,
                        double tol = 1e-8);

/// Finite union of convex polyhedral cones. An empty piece list is the
/// empty set (not {0}).
struct ConeUnion {
  std::vector<PolyConeRep> pieces;

  bool is_empty() const { return pieces.empty(); }
  bool contains(const Vec& z, double tol = 1e-10) const;
};

/// Drops pieces contained in another piece (kept-first order).
ConeUnion prune_redundant(ConeUnion u, double tol = 1e-8);

enum class CoordTag { Zero, Free, NonNeg, NonPos };

/// Product of per-coordinate sign cones: {0}, R, R+, or R-.
struct SignedCoordinateCone {
  std::vector<CoordTag> tags;

  int dim() const { return static_cast<int>(tags.size()); }
  bool contains(const Vec& v, double tol = 1e-10) const;
  bool is_zero() const;
  PolyConeRep to_cone() const;
};

/// Tangent cone to a box: per coordinate a sign cone determined by which
/// bounds are active.
SignedCoordinateCone tangent_cone_box(const BoxSet& Y, const Vec& y, double tol = 1e-12);

/// Critical cone K_Y(y, -g): zero where g_i != 0; otherwise the tangent
/// sign cone of the active bound.
SignedCoordinateCone critical_cone(const BoxSet& Y, const Vec& y, const Vec& g,
                                   double grad_tol = 1e-9, double tol = 1e-12);

/// One affine piece of gph N_[a,b]: the lower vertical ray {a} x R-, the
/// horizontal segment [a,b] x {0}, or the upper vertical ray {b} x R+.
struct GraphPiece {
  enum class Kind { VerticalLower, Horizontal, VerticalUpper };
  Kind kind;
  double a = 0.0, b = 0.0;

  bool contains(double y, double xi, double tol = 1e-9) const;
  /// Classical (= Frechet) normal cone of this convex piece at an
  /// on-piece point, as a 2-D cone in (y, xi) coordinates.
  PolyConeRep normal_cone_at(double y, double xi, double tol = 1e-9) const;
};

/// The pieces of gph N_[a,b]; vertical rays at infinite endpoints are omitted.
std::vector<GraphPiece> graph_pieces_interval(double a, double b);

bool on_interval_graph(double a, double b, double y, double xi, double tol = 1e-9);

/// Frechet normal cone to gph N_[a,b] at an on-graph point: intersection
/// of the piece normal cones over all pieces containing the point. This is
/// the definitional primitive the sampling oracles build on.
PolyConeRep frechet_normal_interval_graph(double a, double b, double y, double xi,
                                          double tol = 1e-9);

/// Limiting normal cone to gph N_[a,b]: the five-case table (interior
/// pieces give a single cone, the two corners give three-piece unions).
ConeUnion limiting_graph_normal_interval(double a, double b, double y, double xi,
                                         double tol = 1e-9);

/// Directional limiting normal cone to gph N_[a,b] in graph-space
/// direction w; empty when w is not tangent, equal to the limiting cone
/// when w = 0.
ConeUnion directional_graph_normal_interval(double a, double b, double y, double xi,
                                            const Eigen::Vector2d& w, double tol = 1e-9);

/// Tangent cone to gph N_[a,b] at an on-graph point (union of pieces).
ConeUnion graph_tangent_interval(double a, double b, double y, double xi,
                                 double tol = 1e-9);

/// Product over coordinates of the interval graph cones, reordered to
/// (mu, nu) in R^m x R^m; `w`, when present, has dimension 2m and is read
/// per coordinate as (w_i, w_{m+i}).
ConeUnion graph_normal_box(const BoxSet& Y, const Vec& y, const Vec& xi,
                           const std::optional<Vec>& w = std::nullopt,
                           double tol = 1e-9);

/// Tangent cone to gph N_Y for a box, in (v, eta) in R^m x R^m ordering.
ConeUnion graph_tangent_box(const BoxSet& Y, const Vec& y, const Vec& xi,
                            double tol = 1e-9);

/// N_Y(y) intersected with {d}^perp for a box (convex directional formula).
/// Returns the empty marker when d is not tangent to Y at y.
PolyConeRep directional_normal_convex_box(const BoxSet& Y, const Vec& y, const Vec& d,
                                          double tol = 1e-12);

}  // namespace bdfoa
