#pragma once

#include "nodalab/common.hpp"

namespace nodalab {

// Second-order jet of a scalar function of three variables: value, gradient
// and Hessian. The arithmetic below propagates jets exactly (forward mode), so
// closed-form test functions and basis functions get analytic derivatives.
struct Jet2 {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();

  static Jet2 constant(double c) {
    Jet2 j;
    j.value = c;
    return j;
  }
  static Jet2 coordinate(int axis, double x) {
    Jet2 j;
    j.value = x;
    j.grad[axis] = 1.0;
    return j;
  }
};

// Apply a scalar function with derivatives (f, f', f'') to a jet.
inline Jet2 chain(const Jet2& a, double f, double df, double ddf) {
  Jet2 r;
  r.value = f;
  r.grad = df * a.grad;
  r.hess = df * a.hess + ddf * (a.grad * a.grad.transpose());
  return r;
}

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value + b.value;
  r.grad = a.grad + b.grad;
  r.hess = a.hess + b.hess;
  return r;
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value - b.value;
  r.grad = a.grad - b.grad;
  r.hess = a.hess - b.hess;
  return r;
}
inline Jet2 operator-(const Jet2& a) {
  Jet2 r;
  r.value = -a.value;
  r.grad = -a.grad;
  r.hess = -a.hess;
  return r;
}
inline Jet2 operator*(double s, const Jet2& a) {
  Jet2 r;
  r.value = s * a.value;
  r.grad = s * a.grad;
  r.hess = s * a.hess;
  return r;
}
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator+(const Jet2& a, double s) {
  Jet2 r = a;
  r.value += s;
  return r;
}
inline Jet2 operator+(double s, const Jet2& a) { return a + s; }
inline Jet2 operator-(const Jet2& a, double s) { return a + (-s); }
inline Jet2 operator-(double s, const Jet2& a) { return (-a) + s; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value * b.value;
  r.grad = a.value * b.grad + b.value * a.grad;
  r.hess = a.value * b.hess + b.value * a.hess + a.grad * b.grad.transpose() + b.grad * a.grad.transpose();
  return r;
}
inline Jet2 operator/(const Jet2& a, double s) { return (1.0 / s) * a; }
inline Jet2 reciprocal(const Jet2& a) {
  const double v = 1.0 / a.value;
  return chain(a, v, -v * v, 2.0 * v * v * v);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }
inline Jet2& operator+=(Jet2& a, const Jet2& b) { return a = a + b; }
inline Jet2& operator-=(Jet2& a, const Jet2& b) { return a = a - b; }
inline Jet2& operator*=(Jet2& a, const Jet2& b) { return a = a * b; }
inline Jet2& operator*=(Jet2& a, double s) { return a = a * s; }

inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return chain(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return chain(a, c, -s, -c);
}
inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.value);
  return chain(a, e, e, e);
}
inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.value);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.value));
}
inline Jet2 pow(const Jet2& a, int n) {
  if (n == 0) return Jet2::constant(1.0);
  const double v = a.value;
  const double f = std::pow(v, n);
  const double df = n * std::pow(v, n - 1);
  const double ddf = n >= 2 ? n * (n - 1) * std::pow(v, n - 2) : 0.0;
  return chain(a, f, df, ddf);
}
inline Jet2 square(const Jet2& a) { return a * a; }

// Scalar helpers so that templated formulas work for double and Jet2 alike.
inline double square(double a) { return a * a; }

}  // namespace nodalab
