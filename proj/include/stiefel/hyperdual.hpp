#pragma once

#include <cmath>

namespace stiefel {

/// Hyper-dual number a + b e1 + c e2 + d e1e2 with e1^2 = e2^2 = 0.
///
/// Seeding e1 along coordinate k and e2 along coordinate l, an evaluation
/// returns f in `a`, df/dx_k in `b`, df/dx_l in `c` and d2f/dx_k dx_l in `d`,
/// exact up to round-off (no truncation error).
template <typename T>
struct HyperDual {
  T a{};
  T b{};
  T c{};
  T d{};

  constexpr HyperDual() = default;
  constexpr HyperDual(T value) : a(value) {}  // NOLINT: implicit promotion of constants
  constexpr HyperDual(T a_, T b_, T c_, T d_) : a(a_), b(b_), c(c_), d(d_) {}

  constexpr T value() const { return a; }

  HyperDual& operator+=(const HyperDual& o) {
    a += o.a; b += o.b; c += o.c; d += o.d;
    return *this;
  }
  HyperDual& operator-=(const HyperDual& o) {
    a -= o.a; b -= o.b; c -= o.c; d -= o.d;
    return *this;
  }
  HyperDual& operator*=(const HyperDual& o) { return *this = *this * o; }
  HyperDual& operator/=(const HyperDual& o) { return *this = *this / o; }

  friend constexpr HyperDual operator-(const HyperDual& x) { return {-x.a, -x.b, -x.c, -x.d}; }
  friend constexpr HyperDual operator+(HyperDual x, const HyperDual& y) { return x += y; }
  friend constexpr HyperDual operator-(HyperDual x, const HyperDual& y) { return x -= y; }
  friend constexpr HyperDual operator*(const HyperDual& x, const HyperDual& y) {
    return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.c * y.a,
            x.a * y.d + x.b * y.c + x.c * y.b + x.d * y.a};
  }
  friend HyperDual operator/(const HyperDual& x, const HyperDual& y) {
    return x * reciprocal(y);
  }

  /// g(x) given g(a), g'(a), g''(a).
  friend constexpr HyperDual chain(const HyperDual& x, T g0, T g1, T g2) {
    return {g0, g1 * x.b, g1 * x.c, g1 * x.d + g2 * x.b * x.c};
  }
  friend HyperDual reciprocal(const HyperDual& x) {
    const T inv = T(1) / x.a;
    return chain(x, inv, -inv * inv, T(2) * inv * inv * inv);
  }
};

template <typename T>
HyperDual<T> sin(const HyperDual<T>& x) {
  using std::cos, std::sin;
  const T s = sin(x.a);
  return chain(x, s, cos(x.a), -s);
}

template <typename T>
HyperDual<T> cos(const HyperDual<T>& x) {
  using std::cos, std::sin;
  const T c = cos(x.a);
  return chain(x, c, -sin(x.a), -c);
}

template <typename T>
HyperDual<T> exp(const HyperDual<T>& x) {
  using std::exp;
  const T e = exp(x.a);
  return chain(x, e, e, e);
}

/// Caller guarantees x.a > 0.
template <typename T>
HyperDual<T> log(const HyperDual<T>& x) {
  using std::log;
  const T inv = T(1) / x.a;
  return chain(x, log(x.a), inv, -inv * inv);
}

/// Caller guarantees x.a > 0.
template <typename T>
HyperDual<T> sqrt(const HyperDual<T>& x) {
  using std::sqrt;
  const T s = sqrt(x.a);
  return chain(x, s, T(0.5) / s, T(-0.25) / (s * x.a));
}

/// Integer power; caller guarantees x.a != 0 when k < 0.
template <typename T>
HyperDual<T> pow(const HyperDual<T>& x, int k) {
  using std::pow;
  if (k == 0) return HyperDual<T>(T(1));
  const T g0 = pow(x.a, k);
  const T g1 = T(k) * pow(x.a, k - 1);
  const T g2 = (k == 1) ? T(0) : T(k) * T(k - 1) * pow(x.a, k - 2);
  return chain(x, g0, g1, g2);
}

}  // namespace stiefel
