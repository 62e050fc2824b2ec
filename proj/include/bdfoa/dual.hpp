#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace bdfoa {

/// Dense second-order forward-mode dual number over `k` independent
/// variables: carries value, gradient and Hessian through arithmetic.
/// All update rules are written symmetrically, so the Hessian stays
/// exactly symmetric bit-for-bit.
template <class T>
struct Dual2 {
  using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  T val{};
  VecT grad;
  MatT hess;

  Dual2() = default;

  static Dual2 constant(T v, Eigen::Index k) {
    Dual2 d;
    d.val = v;
    d.grad = VecT::Zero(k);
    d.hess = MatT::Zero(k, k);
    return d;
  }

  static Dual2 variable(T v, Eigen::Index k, Eigen::Index i) {
    Dual2 d = constant(v, k);
    d.grad(i) = T(1);
    return d;
  }

  Eigen::Index size() const { return grad.size(); }
};

template <class T>
Dual2<T> operator-(const Dual2<T>& u) {
  Dual2<T> r;
  r.val = -u.val;
  r.grad = -u.grad;
  r.hess = -u.hess;
  return r;
}

template <class T>
Dual2<T> operator+(const Dual2<T>& u, const Dual2<T>& v) {
  Dual2<T> r;
  r.val = u.val + v.val;
  r.grad = u.grad + v.grad;
  r.hess = u.hess + v.hess;
  return r;
}

template <class T>
Dual2<T> operator-(const Dual2<T>& u, const Dual2<T>& v) {
  Dual2<T> r;
  r.val = u.val - v.val;
  r.grad = u.grad - v.grad;
  r.hess = u.hess - v.hess;
  return r;
}

template <class T>
Dual2<T> operator*(const Dual2<T>& u, const Dual2<T>& v) {
  Dual2<T> r;
  r.val = u.val * v.val;
  r.grad = u.grad * v.val + v.grad * u.val;
  r.hess = u.hess * v.val + v.hess * u.val + u.grad * v.grad.transpose() +
           v.grad * u.grad.transpose();
  return r;
}

/// Chain rule for a scalar function f applied to u, given f(u), f'(u), f''(u).
template <class T>
Dual2<T> compose(const Dual2<T>& u, T f, T df, T ddf) {
  Dual2<T> r;
  r.val = f;
  r.grad = df * u.grad;
  r.hess = df * u.hess + ddf * (u.grad * u.grad.transpose());
  return r;
}

template <class T>
Dual2<T> operator/(const Dual2<T>& u, const Dual2<T>& v) {
  // u / v = u * (1/v)
  const T w = T(1) / v.val;
  return u * compose(v, w, -w * w, T(2) * w * w * w);
}

template <class T>
Dual2<T> exp(const Dual2<T>& u) {
  const T e = std::exp(u.val);
  return compose(u, e, e, e);
}

template <class T>
Dual2<T> log(const Dual2<T>& u) {
  const T w = T(1) / u.val;
  return compose(u, std::log(u.val), w, -w * w);
}

template <class T>
Dual2<T> sqrt(const Dual2<T>& u) {
  const T s = std::sqrt(u.val);
  const T ds = T(0.5) / s;
  return compose(u, s, ds, T(-0.5) * ds / u.val);
}

template <class T>
Dual2<T> sin(const Dual2<T>& u) {
  const T s = std::sin(u.val), c = std::cos(u.val);
  return compose(u, s, c, -s);
}

template <class T>
Dual2<T> cos(const Dual2<T>& u) {
  const T s = std::sin(u.val), c = std::cos(u.val);
  return compose(u, c, -s, -c);
}

/// u^p with constant exponent p. The caller is responsible for domain checks.
template <class T>
Dual2<T> pow_const(const Dual2<T>& u, T p) {
  if (p == T(0)) return Dual2<T>::constant(T(1), u.size());
  const T f = std::pow(u.val, p);
  const T df = p * std::pow(u.val, p - T(1));
  const T ddf = p * (p - T(1)) * std::pow(u.val, p - T(2));
  return compose(u, f, df, ddf);
}

/// First-order dual with a single seed direction; the cheap path for
/// one-dimensional derivative scans.
struct Dual1 {
  double val = 0;
  double dot = 0;
};

inline Dual1 operator-(Dual1 u) { return {-u.val, -u.dot}; }
inline Dual1 operator+(Dual1 u, Dual1 v) { return {u.val + v.val, u.dot + v.dot}; }
inline Dual1 operator-(Dual1 u, Dual1 v) { return {u.val - v.val, u.dot - v.dot}; }
inline Dual1 operator*(Dual1 u, Dual1 v) {
  return {u.val * v.val, u.dot * v.val + v.dot * u.val};
}
inline Dual1 operator/(Dual1 u, Dual1 v) {
  const double w = 1.0 / v.val;
  return {u.val * w, (u.dot - u.val * v.dot * w) * w};
}
inline Dual1 exp(Dual1 u) {
  const double e = std::exp(u.val);
  return {e, e * u.dot};
}
inline Dual1 log(Dual1 u) { return {std::log(u.val), u.dot / u.val}; }
inline Dual1 sqrt(Dual1 u) {
  const double s = std::sqrt(u.val);
  return {s, 0.5 * u.dot / s};
}
inline Dual1 sin(Dual1 u) { return {std::sin(u.val), std::cos(u.val) * u.dot}; }
inline Dual1 cos(Dual1 u) { return {std::cos(u.val), -std::sin(u.val) * u.dot}; }
inline Dual1 pow_const(Dual1 u, double p) {
  if (p == 0.0) return {1.0, 0.0};
  return {std::pow(u.val, p), p * std::pow(u.val, p - 1.0) * u.dot};
}

}  // namespace bdfoa
