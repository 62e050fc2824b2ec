#include "bdfoa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace bdfoa {

DirectionalNeighborhood::DirectionalNeighborhood(Vec c, double eps, double del, Direction dir)
    : center(std::move(c)), epsilon(eps), delta(del), direction(std::move(dir)) {
  if (epsilon <= 0.0 || delta <= 0.0) throw InvalidArgument("nbhd moduli must be positive");
  if (direction.d.size() != center.size())
    throw DimensionError("direction dimension does not match center");
}

bool nbhd_contains(const DirectionalNeighborhood& nbhd, const Vec& z) {
  if (z.size() != nbhd.center.size()) throw DimensionError("point dimension mismatch");
  const Vec w = z - nbhd.center;
  const double r = w.norm();
  if (r == 0.0) return true;
  if (r >= nbhd.epsilon) return false;  // eps-ball is open
  if (nbhd.direction.zero) return true;
  const Vec unit = w / r;
  const Vec dir = nbhd.direction.d / nbhd.direction.d.norm();
  return (unit - dir).norm() <= nbhd.delta;
}

// ---------------------------------------------------------------------------
// Linear algebra helpers
// ---------------------------------------------------------------------------

namespace {

constexpr double kRayTol = 1e-9;

Mat stack_rows(const std::vector<Vec>& rows, int dim) {
  Mat A(static_cast<int>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); ++i) A.row(static_cast<int>(i)) = rows[i].transpose();
  return A;
}

// Orthonormal basis of null(A); identity for a rowless A.
Mat kernel_basis(const Mat& A, int dim) {
  if (A.rows() == 0) return Mat::Identity(dim, dim);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double thresh = std::max(1e-12, sv.size() > 0 ? sv(0) * 1e-10 : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  return svd.matrixV().rightCols(dim - rank);
}

// Orthonormal complement of the (orthonormal) columns of B inside R^dim.
Mat orth_complement(const Mat& B) {
  const int dim = static_cast<int>(B.rows());
  if (B.cols() == 0) return Mat::Identity(dim, dim);
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(dim - B.cols());
}

void push_unique_dir(std::vector<Vec>& out, const Vec& v) {
  const double n = v.norm();
  if (n < 1e-14) return;
  Vec u = v / n;
  for (const Vec& w : out)
    if ((w - u).norm() <= 1e-9) return;
  out.push_back(std::move(u));
}

// Extreme directions of {z : <a,z> <= 0 (halfspaces), <e,z> = 0 (equalities)}:
// lineality basis as +/- pairs plus the extreme rays of the pointed quotient.
std::vector<Vec> enumerate_generators(int dim, const std::vector<Vec>& halfspaces,
                                      const std::vector<Vec>& equalities) {
  std::vector<Vec> gens;
  const Mat Q = kernel_basis(stack_rows(equalities, dim), dim);
  const int k = static_cast<int>(Q.cols());
  if (k == 0) return gens;  // the cone is {0}

  std::vector<Vec> proj;
  for (const Vec& a : halfspaces) {
    Vec ap = Q.transpose() * a;
    if (ap.norm() > 1e-12) proj.push_back(std::move(ap));
  }

  if (proj.empty()) {
    for (int i = 0; i < k; ++i) {
      push_unique_dir(gens, Q.col(i));
      push_unique_dir(gens, -Q.col(i));
    }
    return gens;
  }

  const Mat L = kernel_basis(stack_rows(proj, k), k);
  const Mat M = orth_complement(L);
  const int j = static_cast<int>(M.cols());

  std::vector<Vec> reduced;
  for (const Vec& a : proj) {
    Vec ar = M.transpose() * a;
    if (ar.norm() > 1e-12) reduced.push_back(std::move(ar));
  }

  auto feasible = [&](const Vec& v) {
    for (const Vec& a : reduced)
      if (a.dot(v) > kRayTol) return false;
    return true;
  };

  std::vector<Vec> rays;
  if (j >= 1) {
    const int r = static_cast<int>(reduced.size());
    // iterate over all (j-1)-subsets of the reduced rows
    std::vector<int> idx(static_cast<size_t>(std::max(j - 1, 0)));
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == static_cast<int>(idx.size())) {
        Mat S(depth, j);
        for (int t = 0; t < depth; ++t) S.row(t) = reduced[idx[t]].transpose();
        const Mat N = kernel_basis(S, j);
        if (N.cols() != 1) return;
        Vec v = N.col(0);
        if (feasible(v)) push_unique_dir(rays, v);
        if (feasible(-v)) push_unique_dir(rays, -v);
        return;
      }
      for (int i = start; i < r; ++i) {
        idx[depth] = i;
        rec(i + 1, depth + 1);
      }
    };
    if (j == 1) {
      Vec v = Vec::Ones(1);
      if (feasible(v)) push_unique_dir(rays, v);
      if (feasible(-v)) push_unique_dir(rays, -v);
    } else {
      rec(0, 0);
    }
  }

  for (const Vec& w : rays) push_unique_dir(gens, Q * (M * w));
  for (int i = 0; i < L.cols(); ++i) {
    push_unique_dir(gens, Q * L.col(i));
    push_unique_dir(gens, -(Q * L.col(i)));
  }
  return gens;
}

std::vector<Vec> normalize_rows(std::vector<Vec> rows, int dim) {
  std::vector<Vec> out;
  for (Vec& r : rows) {
    if (r.size() != dim) throw DimensionError("cone row dimension mismatch");
    push_unique_dir(out, r);
  }
  return out;
}

// Splits +/- pairs from `rows` into equalities.
void extract_pairs(std::vector<Vec>& rows, std::vector<Vec>& equalities) {
  std::vector<Vec> keep;
  std::vector<bool> used(rows.size(), false);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (used[i]) continue;
    bool paired = false;
    for (size_t j = i + 1; j < rows.size(); ++j) {
      if (used[j]) continue;
      if ((rows[i] + rows[j]).norm() <= 1e-9) {
        used[i] = used[j] = true;
        equalities.push_back(rows[i]);
        paired = true;
        break;
      }
    }
    if (!paired) keep.push_back(rows[i]);
  }
  rows = std::move(keep);
}

}  // namespace

// ---------------------------------------------------------------------------
// PolyConeRep
// ---------------------------------------------------------------------------

bool PolyConeRep::contains(const Vec& z, double tol) const {
  if (empty_marker) return false;
  if (z.size() != dim) throw DimensionError("cone membership dimension mismatch");
  const double scale = std::max(1.0, z.norm());
  for (const Vec& a : halfspaces)
    if (a.dot(z) > tol * scale) return false;
  for (const Vec& e : equalities)
    if (std::abs(e.dot(z)) > tol * scale) return false;
  return true;
}

PolyConeRep PolyConeRep::empty(int dim) {
  PolyConeRep c;
  c.dim = dim;
  c.empty_marker = true;
  return c;
}

PolyConeRep PolyConeRep::zero_cone(int dim) {
  PolyConeRep c;
  c.dim = dim;
  for (int i = 0; i < dim; ++i) c.equalities.push_back(Vec::Unit(dim, i));
  return c;
}

PolyConeRep PolyConeRep::full_space(int dim) {
  PolyConeRep c;
  c.dim = dim;
  for (int i = 0; i < dim; ++i) {
    c.generators.push_back(Vec::Unit(dim, i));
    c.generators.push_back(-Vec::Unit(dim, i));
  }
  return c;
}

PolyConeRep PolyConeRep::from_halfspaces(int dim, std::vector<Vec> halfspaces,
                                         std::vector<Vec> equalities) {
  PolyConeRep c;
  c.dim = dim;
  c.halfspaces = normalize_rows(std::move(halfspaces), dim);
  c.equalities = normalize_rows(std::move(equalities), dim);
  extract_pairs(c.halfspaces, c.equalities);
  c.equalities = normalize_rows(std::move(c.equalities), dim);
  c.generators = enumerate_generators(dim, c.halfspaces, c.equalities);
  return c;
}

PolyConeRep PolyConeRep::from_generators(int dim, std::vector<Vec> generators) {
  PolyConeRep c;
  c.dim = dim;
  c.generators = normalize_rows(std::move(generators), dim);
  // H-representation via the polar: C = {z : <p,z> <= 0 for p in gen(C*)}.
  std::vector<Vec> polar_gens = enumerate_generators(dim, c.generators, {});
  extract_pairs(polar_gens, c.equalities);
  c.halfspaces = std::move(polar_gens);
  return c;
}

bool PolyConeRep::validate(double tol) const {
  if (empty_marker) return generators.empty();
  for (const Vec& g : generators)
    if (!contains(g, tol)) return false;
  // Re-derive each representation from the other and cross-check.
  const PolyConeRep from_h = from_halfspaces(dim, halfspaces, equalities);
  const PolyConeRep from_g = from_generators(dim, generators);
  for (const Vec& g : from_h.generators)
    if (!from_g.contains(g, tol)) return false;
  for (const Vec& g : generators)
    if (!from_h.contains(g, tol)) return false;
  return true;
}

PolyConeRep polar(const PolyConeRep& c) {
  if (c.dim > 4) throw InvalidArgument("polar restricted to ambient dimension <= 4");
  if (c.empty_marker) return PolyConeRep::full_space(c.dim);
  PolyConeRep p;
  p.dim = c.dim;
  for (const Vec& a : c.halfspaces) push_unique_dir(p.generators, a);
  for (const Vec& e : c.equalities) {
    push_unique_dir(p.generators, e);
    push_unique_dir(p.generators, -e);
  }
  std::vector<Vec> rows = c.generators;
  std::vector<Vec> norm_rows;
  for (const Vec& r : rows) push_unique_dir(norm_rows, r);
  extract_pairs(norm_rows, p.equalities);
  p.halfspaces = std::move(norm_rows);
  return p;
}

bool cone_contains_cone(const PolyConeRep& inner, const PolyConeRep& outer, double tol) {
  if (inner.empty_marker) return true;
  if (outer.empty_marker) return false;
  for (const Vec& g : inner.generators)
    if (!outer.contains(g, tol)) return false;
  // A cone with no generators is {0}, always contained.
  return true;
}

bool ConeUnion::contains(const Vec& z, double tol) const {
  for (const auto& p : pieces)
    if (p.contains(z, tol)) return true;
  return false;
}

ConeUnion prune_redundant(ConeUnion u, double tol) {
  ConeUnion out;
  for (size_t i = 0; i < u.pieces.size(); ++i) {
    bool redundant = false;
    for (size_t j = 0; j < u.pieces.size() && !redundant; ++j) {
      if (i == j) continue;
      // kept-first tie break for identical pieces
      const bool i_in_j = cone_contains_cone(u.pieces[i], u.pieces[j], tol);
      const bool j_in_i = cone_contains_cone(u.pieces[j], u.pieces[i], tol);
      if (i_in_j && (!j_in_i || j < i)) redundant = true;
    }
    if (!redundant) out.pieces.push_back(u.pieces[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sign cones, tangent and critical cones for boxes
// ---------------------------------------------------------------------------

bool SignedCoordinateCone::contains(const Vec& v, double tol) const {
  if (v.size() != dim()) throw DimensionError("sign cone dimension mismatch");
  const double s = tol * std::max(1.0, v.norm());
  for (int i = 0; i < dim(); ++i) {
    switch (tags[i]) {
      case CoordTag::Zero:
        if (std::abs(v(i)) > s) return false;
        break;
      case CoordTag::NonNeg:
        if (v(i) < -s) return false;
        break;
      case CoordTag::NonPos:
        if (v(i) > s) return false;
        break;
      case CoordTag::Free:
        break;
    }
  }
  return true;
}

bool SignedCoordinateCone::is_zero() const {
  return std::all_of(tags.begin(), tags.end(),
                     [](CoordTag t) { return t == CoordTag::Zero; });
}

PolyConeRep SignedCoordinateCone::to_cone() const {
  PolyConeRep c;
  c.dim = dim();
  for (int i = 0; i < dim(); ++i) {
    const Vec e = Vec::Unit(dim(), i);
    switch (tags[i]) {
      case CoordTag::Zero:
        c.equalities.push_back(e);
        break;
      case CoordTag::NonNeg:
        c.halfspaces.push_back(-e);
        c.generators.push_back(e);
        break;
      case CoordTag::NonPos:
        c.halfspaces.push_back(e);
        c.generators.push_back(-e);
        break;
      case CoordTag::Free:
        c.generators.push_back(e);
        c.generators.push_back(-e);
        break;
    }
  }
  return c;
}

SignedCoordinateCone tangent_cone_box(const BoxSet& Y, const Vec& y, double tol) {
  if (y.size() != Y.dim()) throw DimensionError("point dimension mismatch");
  if (!Y.contains(y, tol)) throw InvalidArgument("point is not in the box");
  SignedCoordinateCone k;
  k.tags.resize(Y.dim());
  for (int i = 0; i < Y.dim(); ++i) {
    const bool at_lo = std::isfinite(Y.lower(i)) && std::abs(y(i) - Y.lower(i)) <= tol;
    const bool at_hi = std::isfinite(Y.upper(i)) && std::abs(y(i) - Y.upper(i)) <= tol;
    if (at_lo && at_hi)
      k.tags[i] = CoordTag::Zero;
    else if (at_lo)
      k.tags[i] = CoordTag::NonNeg;
    else if (at_hi)
      k.tags[i] = CoordTag::NonPos;
    else
      k.tags[i] = CoordTag::Free;
  }
  return k;
}

SignedCoordinateCone critical_cone(const BoxSet& Y, const Vec& y, const Vec& g,
                                   double grad_tol, double tol) {
  SignedCoordinateCone k = tangent_cone_box(Y, y, tol);
  if (g.size() != Y.dim()) throw DimensionError("gradient dimension mismatch");
  for (int i = 0; i < Y.dim(); ++i)
    if (std::abs(g(i)) > grad_tol) k.tags[i] = CoordTag::Zero;
  return k;
}

// ---------------------------------------------------------------------------
// Interval graph pieces and cones
// ---------------------------------------------------------------------------

namespace {

Eigen::Vector2d v2(double a, double b) { return Eigen::Vector2d(a, b); }

PolyConeRep cone2(std::vector<Vec> gens, std::vector<Vec> halfspaces,
                  std::vector<Vec> equalities) {
  PolyConeRep c;
  c.dim = 2;
  c.generators = std::move(gens);
  c.halfspaces = std::move(halfspaces);
  c.equalities = std::move(equalities);
  return c;
}

// The recurring 2-D cones of the case tables, in (y, xi) coordinates.
PolyConeRep horizontal_line() {  // R x {0}
  return cone2({v2(1, 0), v2(-1, 0)}, {}, {v2(0, 1)});
}
PolyConeRep vertical_line() {  // {0} x R
  return cone2({v2(0, 1), v2(0, -1)}, {}, {v2(1, 0)});
}
PolyConeRep quadrant_mp() {  // R- x R+
  return cone2({v2(-1, 0), v2(0, 1)}, {v2(1, 0), v2(0, -1)}, {});
}
PolyConeRep quadrant_pm() {  // R+ x R-
  return cone2({v2(1, 0), v2(0, -1)}, {v2(-1, 0), v2(0, 1)}, {});
}

// Local structure of gph N_[a,b] at an on-graph point.
enum class GraphSite {
  WholeLine,        // Y = R: graph is R x {0}
  Degenerate,       // a == b: graph is {a} x R
  HorizontalInt,    // y strictly inside, xi = 0
  VerticalLowerInt, // y = a, xi < 0
  VerticalUpperInt, // y = b, xi > 0
  CornerLower,      // (a, 0), a < b
  CornerUpper,      // (b, 0), a < b
};

GraphSite classify_site(double a, double b, double y, double xi, double tol) {
  if (!on_interval_graph(a, b, y, xi, tol))
    throw InvalidArgument("(y, xi) is not on gph N_[a,b]");
  const bool lo = std::isfinite(a), hi = std::isfinite(b);
  if (!lo && !hi) return GraphSite::WholeLine;
  if (lo && hi && a == b) return GraphSite::Degenerate;
  if (lo && std::abs(y - a) <= tol) {
    if (xi < -tol) return GraphSite::VerticalLowerInt;
    return GraphSite::CornerLower;
  }
  if (hi && std::abs(y - b) <= tol) {
    if (xi > tol) return GraphSite::VerticalUpperInt;
    return GraphSite::CornerUpper;
  }
  return GraphSite::HorizontalInt;
}

}  // namespace

bool GraphPiece::contains(double y, double xi, double tol) const {
  switch (kind) {
    case Kind::VerticalLower: return std::abs(y - a) <= tol && xi <= tol;
    case Kind::Horizontal: return y >= a - tol && y <= b + tol && std::abs(xi) <= tol;
    case Kind::VerticalUpper: return std::abs(y - b) <= tol && xi >= -tol;
  }
  return false;
}

PolyConeRep GraphPiece::normal_cone_at(double y, double xi, double tol) const {
  if (!contains(y, xi, tol)) throw InvalidArgument("point is not on this graph piece");
  switch (kind) {
    case Kind::VerticalLower:
      if (xi < -tol) return horizontal_line();
      // endpoint (a, 0) of {a} x R-: normal cone R x R+
      return cone2({v2(1, 0), v2(-1, 0), v2(0, 1)}, {v2(0, -1)}, {});
    case Kind::VerticalUpper:
      if (xi > tol) return horizontal_line();
      return cone2({v2(1, 0), v2(-1, 0), v2(0, -1)}, {v2(0, 1)}, {});
    case Kind::Horizontal: {
      const bool at_lo = std::isfinite(a) && std::abs(y - a) <= tol;
      const bool at_hi = std::isfinite(b) && std::abs(y - b) <= tol;
      if (at_lo && at_hi) return PolyConeRep::full_space(2);  // degenerate point piece
      if (at_lo) return cone2({v2(-1, 0), v2(0, 1), v2(0, -1)}, {v2(1, 0)}, {});
      if (at_hi) return cone2({v2(1, 0), v2(0, 1), v2(0, -1)}, {v2(-1, 0)}, {});
      return vertical_line();
    }
  }
  throw Error("unreachable");
}

std::vector<GraphPiece> graph_pieces_interval(double a, double b) {
  if (!(a <= b)) throw InvalidArgument("interval requires a <= b");
  std::vector<GraphPiece> pieces;
  if (std::isfinite(a)) pieces.push_back(GraphPiece{GraphPiece::Kind::VerticalLower, a, b});
  pieces.push_back(GraphPiece{GraphPiece::Kind::Horizontal, a, b});
  if (std::isfinite(b)) pieces.push_back(GraphPiece{GraphPiece::Kind::VerticalUpper, a, b});
  return pieces;
}

bool on_interval_graph(double a, double b, double y, double xi, double tol) {
  for (const auto& p : graph_pieces_interval(a, b))
    if (p.contains(y, xi, tol)) return true;
  return false;
}

PolyConeRep frechet_normal_interval_graph(double a, double b, double y, double xi,
                                          double tol) {
  std::vector<Vec> halfspaces, equalities;
  bool any = false;
  for (const auto& p : graph_pieces_interval(a, b)) {
    if (!p.contains(y, xi, tol)) continue;
    any = true;
    const PolyConeRep c = p.normal_cone_at(y, xi, tol);
    halfspaces.insert(halfspaces.end(), c.halfspaces.begin(), c.halfspaces.end());
    equalities.insert(equalities.end(), c.equalities.begin(), c.equalities.end());
  }
  if (!any) throw InvalidArgument("(y, xi) is not on gph N_[a,b]");
  return PolyConeRep::from_halfspaces(2, std::move(halfspaces), std::move(equalities));
}

ConeUnion limiting_graph_normal_interval(double a, double b, double y, double xi,
                                         double tol) {
  ConeUnion u;
  switch (classify_site(a, b, y, xi, tol)) {
    case GraphSite::WholeLine:
    case GraphSite::HorizontalInt:
      u.pieces = {vertical_line()};
      break;
    case GraphSite::Degenerate:
    case GraphSite::VerticalLowerInt:
    case GraphSite::VerticalUpperInt:
      u.pieces = {horizontal_line()};
      break;
    case GraphSite::CornerLower:
      u.pieces = {quadrant_mp(), horizontal_line(), vertical_line()};
      break;
    case GraphSite::CornerUpper:
      u.pieces = {quadrant_pm(), horizontal_line(), vertical_line()};
      break;
  }
  return u;
}

ConeUnion directional_graph_normal_interval(double a, double b, double y, double xi,
                                            const Eigen::Vector2d& w, double tol) {
  const GraphSite site = classify_site(a, b, y, xi, tol);
  const double wn = w.norm();
  if (wn <= tol) return limiting_graph_normal_interval(a, b, y, xi, tol);
  const Eigen::Vector2d d = w / wn;
  ConeUnion u;  // empty = not tangent
  switch (site) {
    case GraphSite::WholeLine:
    case GraphSite::HorizontalInt:
      if (std::abs(d(1)) <= tol) u.pieces = {vertical_line()};
      break;
    case GraphSite::Degenerate:
    case GraphSite::VerticalLowerInt:
    case GraphSite::VerticalUpperInt:
      if (std::abs(d(0)) <= tol) u.pieces = {horizontal_line()};
      break;
    case GraphSite::CornerLower:
      if (d(0) > tol && std::abs(d(1)) <= tol)
        u.pieces = {vertical_line()};  // into the horizontal piece
      else if (std::abs(d(0)) <= tol && d(1) < -tol)
        u.pieces = {horizontal_line()};  // down the vertical piece
      break;
    case GraphSite::CornerUpper:
      if (d(0) < -tol && std::abs(d(1)) <= tol)
        u.pieces = {vertical_line()};
      else if (std::abs(d(0)) <= tol && d(1) > tol)
        u.pieces = {horizontal_line()};
      break;
  }
  return u;
}

ConeUnion graph_tangent_interval(double a, double b, double y, double xi, double tol) {
  ConeUnion u;
  switch (classify_site(a, b, y, xi, tol)) {
    case GraphSite::WholeLine:
    case GraphSite::HorizontalInt:
      u.pieces = {horizontal_line()};
      break;
    case GraphSite::Degenerate:
    case GraphSite::VerticalLowerInt:
    case GraphSite::VerticalUpperInt:
      u.pieces = {vertical_line()};
      break;
    case GraphSite::CornerLower:
      // {0} x R-  union  R+ x {0}
      u.pieces = {cone2({v2(0, -1)}, {v2(0, 1)}, {v2(1, 0)}),
                  cone2({v2(1, 0)}, {v2(-1, 0)}, {v2(0, 1)})};
      break;
    case GraphSite::CornerUpper:
      u.pieces = {cone2({v2(0, 1)}, {v2(0, -1)}, {v2(1, 0)}),
                  cone2({v2(-1, 0)}, {v2(1, 0)}, {v2(0, 1)})};
      break;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Box products
// ---------------------------------------------------------------------------

namespace {

// Assembles the product of per-coordinate 2-D cones into a cone in
// (mu_1..mu_m, nu_1..nu_m) ordering: coordinate i of factor i maps to
// output coordinates (i, m+i).
PolyConeRep assemble_product(const std::vector<const PolyConeRep*>& factors) {
  const int m = static_cast<int>(factors.size());
  PolyConeRep out;
  out.dim = 2 * m;
  auto lift = [&](const Vec& r2, int i) {
    Vec r = Vec::Zero(2 * m);
    r(i) = r2(0);
    r(m + i) = r2(1);
    return r;
  };
  for (int i = 0; i < m; ++i) {
    const PolyConeRep& c = *factors[i];
    for (const Vec& g : c.generators) out.generators.push_back(lift(g, i));
    for (const Vec& a : c.halfspaces) out.halfspaces.push_back(lift(a, i));
    for (const Vec& e : c.equalities) out.equalities.push_back(lift(e, i));
  }
  return out;
}

ConeUnion product_of_unions(const std::vector<ConeUnion>& per_coord) {
  ConeUnion out;
  for (const auto& u : per_coord)
    if (u.is_empty()) return out;  // empty product
  std::vector<size_t> choice(per_coord.size(), 0);
  while (true) {
    std::vector<const PolyConeRep*> factors;
    for (size_t i = 0; i < per_coord.size(); ++i)
      factors.push_back(&per_coord[i].pieces[choice[i]]);
    out.pieces.push_back(assemble_product(factors));
    // lexicographic advance
    size_t i = 0;
    for (; i < choice.size(); ++i) {
      if (++choice[i] < per_coord[i].pieces.size()) break;
      choice[i] = 0;
    }
    if (i == choice.size()) break;
  }
  return prune_redundant(std::move(out));
}

}  // namespace

ConeUnion graph_normal_box(const BoxSet& Y, const Vec& y, const Vec& xi,
                           const std::optional<Vec>& w, double tol) {
  const int m = Y.dim();
  if (y.size() != m || xi.size() != m) throw DimensionError("graph point dimension mismatch");
  if (w && w->size() != 2 * m) throw DimensionError("graph direction must have dimension 2m");
  std::vector<ConeUnion> per_coord(m);
  for (int i = 0; i < m; ++i) {
    if (w) {
      per_coord[i] = directional_graph_normal_interval(
          Y.lower(i), Y.upper(i), y(i), xi(i), v2((*w)(i), (*w)(m + i)), tol);
    } else {
      per_coord[i] = limiting_graph_normal_interval(Y.lower(i), Y.upper(i), y(i), xi(i), tol);
    }
  }
  return product_of_unions(per_coord);
}

ConeUnion graph_tangent_box(const BoxSet& Y, const Vec& y, const Vec& xi, double tol) {
  const int m = Y.dim();
  if (y.size() != m || xi.size() != m) throw DimensionError("graph point dimension mismatch");
  std::vector<ConeUnion> per_coord(m);
  for (int i = 0; i < m; ++i)
    per_coord[i] = graph_tangent_interval(Y.lower(i), Y.upper(i), y(i), xi(i), tol);
  return product_of_unions(per_coord);
}

PolyConeRep directional_normal_convex_box(const BoxSet& Y, const Vec& y, const Vec& d,
                                          double tol) {
  const int m = Y.dim();
  if (y.size() != m || d.size() != m) throw DimensionError("dimension mismatch");
  if (!Y.contains(y, tol)) throw InvalidArgument("point is not in the box");
  const SignedCoordinateCone tangent = tangent_cone_box(Y, y, tol);
  if (!tangent.contains(d, 1e-10)) return PolyConeRep::empty(m);

  std::vector<Vec> halfspaces, equalities;
  const double active_tol = 1e-9;
  for (int i = 0; i < m; ++i) {
    const bool at_lo = std::isfinite(Y.lower(i)) && std::abs(y(i) - Y.lower(i)) <= active_tol;
    const bool at_hi = std::isfinite(Y.upper(i)) && std::abs(y(i) - Y.upper(i)) <= active_tol;
    if (at_lo && at_hi) continue;  // N/{a} = R, no constraint
    if (at_lo)
      halfspaces.push_back(Vec::Unit(m, i));  // xi_i <= 0
    else if (at_hi)
      halfspaces.push_back(-Vec::Unit(m, i));  // xi_i >= 0
    else
      equalities.push_back(Vec::Unit(m, i));  // interior: xi_i = 0
  }
  if (d.norm() > 0) equalities.push_back(d / d.norm());
  return PolyConeRep::from_halfspaces(m, std::move(halfspaces), std::move(equalities));
}

}  // namespace bdfoa
