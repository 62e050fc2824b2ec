#pragma once

#include "bdfoa/common.hpp"

namespace bdfoa {

/// Product of closed intervals; entries may be -inf/+inf.
struct BoxSet {
  Vec lower, upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool bounded() const { return lower.allFinite() && upper.allFinite(); }
  bool contains(const Vec& y, double tol = 1e-12) const;
  Vec project(const Vec& y) const;

  static BoxSet whole_space(int m);
  static BoxSet bounds(Vec lo, Vec hi);
};

}  // namespace bdfoa
