#pragma once

// Fixed-order forward-mode differentiation scalars. The copula and margin
// formulas are written once as templates; instantiating them with these types
// yields exact partial derivatives (chain-rule propagation, no finite
// differencing). Dual2<N>: value + gradient + Hessian in N variables.
// Dual3: value + derivatives through third order in exactly 3 variables,
// which is what the likelihood Hessian needs from a copula CDF.

#include <cmath>

#include "ordcop/special.hpp"

namespace ordcop {

template <int N>
struct Dual2 {
  double v = 0.0;
  double g[N] = {};
  double h[N * (N + 1) / 2] = {};

  static constexpr int hidx(int i, int j) {
    if (i > j) { const int t = i; i = j; j = t; }
    return i * N - i * (i - 1) / 2 + (j - i);
  }

  Dual2() = default;
  /* implicit */ Dual2(double c) { v = c; }

  static Dual2 var(double value, int index) {
    Dual2 d;
    d.v = value;
    d.g[index] = 1.0;
    return d;
  }

  double grad(int i) const { return g[i]; }
  double hess(int i, int j) const { return h[hidx(i, j)]; }
};

template <int N>
inline Dual2<N> operator+(const Dual2<N>& a, const Dual2<N>& b) {
  Dual2<N> c;
  c.v = a.v + b.v;
  for (int i = 0; i < N; ++i) c.g[i] = a.g[i] + b.g[i];
  for (int i = 0; i < N * (N + 1) / 2; ++i) c.h[i] = a.h[i] + b.h[i];
  return c;
}

template <int N>
inline Dual2<N> operator-(const Dual2<N>& a, const Dual2<N>& b) {
  Dual2<N> c;
  c.v = a.v - b.v;
  for (int i = 0; i < N; ++i) c.g[i] = a.g[i] - b.g[i];
  for (int i = 0; i < N * (N + 1) / 2; ++i) c.h[i] = a.h[i] - b.h[i];
  return c;
}

template <int N>
inline Dual2<N> operator-(const Dual2<N>& a) {
  Dual2<N> c;
  c.v = -a.v;
  for (int i = 0; i < N; ++i) c.g[i] = -a.g[i];
  for (int i = 0; i < N * (N + 1) / 2; ++i) c.h[i] = -a.h[i];
  return c;
}

template <int N>
inline Dual2<N> operator*(const Dual2<N>& a, const Dual2<N>& b) {
  Dual2<N> c;
  c.v = a.v * b.v;
  for (int i = 0; i < N; ++i) c.g[i] = a.g[i] * b.v + a.v * b.g[i];
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      const int ij = Dual2<N>::hidx(i, j);
      c.h[ij] = a.h[ij] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[ij];
    }
  return c;
}

// f(a) with scalar derivatives f1 = f', f2 = f'' evaluated at a.v.
template <int N>
inline Dual2<N> chain(const Dual2<N>& a, double f0, double f1, double f2) {
  Dual2<N> c;
  c.v = f0;
  for (int i = 0; i < N; ++i) c.g[i] = f1 * a.g[i];
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      const int ij = Dual2<N>::hidx(i, j);
      c.h[ij] = f1 * a.h[ij] + f2 * a.g[i] * a.g[j];
    }
  return c;
}

template <int N>
inline Dual2<N> operator/(const Dual2<N>& a, const Dual2<N>& b) {
  const double iv = 1.0 / b.v;
  return a * chain(b, iv, -iv * iv, 2.0 * iv * iv * iv);
}

template <int N> inline Dual2<N> operator+(const Dual2<N>& a, double s) { Dual2<N> c = a; c.v += s; return c; }
template <int N> inline Dual2<N> operator+(double s, const Dual2<N>& a) { return a + s; }
template <int N> inline Dual2<N> operator-(const Dual2<N>& a, double s) { return a + (-s); }
template <int N> inline Dual2<N> operator-(double s, const Dual2<N>& a) { return (-a) + s; }
template <int N> inline Dual2<N> operator*(const Dual2<N>& a, double s) {
  Dual2<N> c;
  c.v = a.v * s;
  for (int i = 0; i < N; ++i) c.g[i] = a.g[i] * s;
  for (int i = 0; i < N * (N + 1) / 2; ++i) c.h[i] = a.h[i] * s;
  return c;
}
template <int N> inline Dual2<N> operator*(double s, const Dual2<N>& a) { return a * s; }
template <int N> inline Dual2<N> operator/(const Dual2<N>& a, double s) { return a * (1.0 / s); }
template <int N> inline Dual2<N> operator/(double s, const Dual2<N>& b) {
  const double iv = 1.0 / b.v;
  return chain(b, s * iv, -s * iv * iv, 2.0 * s * iv * iv * iv);
}

template <int N> inline Dual2<N> exp(const Dual2<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
template <int N> inline Dual2<N> log(const Dual2<N>& a) {
  const double iv = 1.0 / a.v;
  return chain(a, std::log(a.v), iv, -iv * iv);
}
template <int N> inline Dual2<N> log1p(const Dual2<N>& a) {
  const double iv = 1.0 / (1.0 + a.v);
  return chain(a, std::log1p(a.v), iv, -iv * iv);
}
template <int N> inline Dual2<N> expm1(const Dual2<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, std::expm1(a.v), e, e);
}
template <int N> inline Dual2<N> sqrt(const Dual2<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int N> inline Dual2<N> pow(const Dual2<N>& a, double p) {
  const double f0 = std::pow(a.v, p);
  return chain(a, f0, p * f0 / a.v, p * (p - 1.0) * f0 / (a.v * a.v));
}
template <int N> inline Dual2<N> norm_cdf(const Dual2<N>& a) {
  const double pdf = norm_pdf(a.v);
  return chain(a, ordcop::norm_cdf(a.v), pdf, -a.v * pdf);
}
template <int N> inline Dual2<N> norm_pdf(const Dual2<N>& a) {
  const double pdf = ordcop::norm_pdf(a.v);
  return chain(a, pdf, -a.v * pdf, (a.v * a.v - 1.0) * pdf);
}
// z = Phi^{-1}(u) differentiated with respect to u.
template <int N> inline Dual2<N> norm_quantile(const Dual2<N>& a) {
  const double z = ordcop::norm_quantile(a.v);
  const double pdf = ordcop::norm_pdf(z);
  return chain(a, z, 1.0 / pdf, z / (pdf * pdf));
}

// Two-argument primitive f(a, b) with supplied partial derivatives
// (fa, fb, faa, fab, fbb) at (a.v, b.v).
template <int N>
inline Dual2<N> compose2(const Dual2<N>& a, const Dual2<N>& b, double f0, double fa,
                         double fb, double faa, double fab, double fbb) {
  Dual2<N> c;
  c.v = f0;
  for (int i = 0; i < N; ++i) c.g[i] = fa * a.g[i] + fb * b.g[i];
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      const int ij = Dual2<N>::hidx(i, j);
      c.h[ij] = fa * a.h[ij] + fb * b.h[ij] + faa * a.g[i] * a.g[j] +
                fab * (a.g[i] * b.g[j] + a.g[j] * b.g[i]) + fbb * b.g[i] * b.g[j];
    }
  return c;
}

// ---------------------------------------------------------------------------

struct Dual3 {
  // Packed symmetric storage; variable count fixed at 3 (u, v, gamma).
  double v = 0.0;
  double g[3] = {};
  double h[6] = {};   // (00) (01) (02) (11) (12) (22)
  double t[10] = {};  // (000)(001)(002)(011)(012)(022)(111)(112)(122)(222)

  static constexpr int hidx(int i, int j) {
    if (i > j) { const int t_ = i; i = j; j = t_; }
    return i == 0 ? j : (i == 1 ? 2 + j : 5);
  }
  static constexpr int tidx(int i, int j, int k) {
    // sort (i, j, k)
    if (i > j) { const int t_ = i; i = j; j = t_; }
    if (j > k) { const int t_ = j; j = k; k = t_; }
    if (i > j) { const int t_ = i; i = j; j = t_; }
    if (i == 0) return j == 0 ? k : (j == 1 ? 2 + k : 5);
    if (i == 1) return j == 1 ? 5 + k : 8;
    return 9;
  }

  Dual3() = default;
  /* implicit */ Dual3(double c) { v = c; }

  static Dual3 var(double value, int index) {
    Dual3 d;
    d.v = value;
    d.g[index] = 1.0;
    return d;
  }

  double grad(int i) const { return g[i]; }
  double hess(int i, int j) const { return h[hidx(i, j)]; }
  double third(int i, int j, int k) const { return t[tidx(i, j, k)]; }
};

inline Dual3 operator+(const Dual3& a, const Dual3& b) {
  Dual3 c;
  c.v = a.v + b.v;
  for (int i = 0; i < 3; ++i) c.g[i] = a.g[i] + b.g[i];
  for (int i = 0; i < 6; ++i) c.h[i] = a.h[i] + b.h[i];
  for (int i = 0; i < 10; ++i) c.t[i] = a.t[i] + b.t[i];
  return c;
}

inline Dual3 operator-(const Dual3& a, const Dual3& b) {
  Dual3 c;
  c.v = a.v - b.v;
  for (int i = 0; i < 3; ++i) c.g[i] = a.g[i] - b.g[i];
  for (int i = 0; i < 6; ++i) c.h[i] = a.h[i] - b.h[i];
  for (int i = 0; i < 10; ++i) c.t[i] = a.t[i] - b.t[i];
  return c;
}

inline Dual3 operator-(const Dual3& a) {
  Dual3 c;
  c.v = -a.v;
  for (int i = 0; i < 3; ++i) c.g[i] = -a.g[i];
  for (int i = 0; i < 6; ++i) c.h[i] = -a.h[i];
  for (int i = 0; i < 10; ++i) c.t[i] = -a.t[i];
  return c;
}

inline Dual3 operator*(const Dual3& a, const Dual3& b) {
  Dual3 c;
  c.v = a.v * b.v;
  for (int i = 0; i < 3; ++i) c.g[i] = a.g[i] * b.v + a.v * b.g[i];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const int ij = Dual3::hidx(i, j);
      c.h[ij] = a.h[ij] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[ij];
    }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int k = j; k < 3; ++k) {
        const int ijk = Dual3::tidx(i, j, k);
        c.t[ijk] = a.t[ijk] * b.v + a.v * b.t[ijk] +
                   a.h[Dual3::hidx(i, j)] * b.g[k] + a.h[Dual3::hidx(i, k)] * b.g[j] +
                   a.h[Dual3::hidx(j, k)] * b.g[i] + a.g[i] * b.h[Dual3::hidx(j, k)] +
                   a.g[j] * b.h[Dual3::hidx(i, k)] + a.g[k] * b.h[Dual3::hidx(i, j)];
      }
  return c;
}

inline Dual3 chain(const Dual3& a, double f0, double f1, double f2, double f3) {
  Dual3 c;
  c.v = f0;
  for (int i = 0; i < 3; ++i) c.g[i] = f1 * a.g[i];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const int ij = Dual3::hidx(i, j);
      c.h[ij] = f1 * a.h[ij] + f2 * a.g[i] * a.g[j];
    }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int k = j; k < 3; ++k) {
        const int ijk = Dual3::tidx(i, j, k);
        c.t[ijk] = f1 * a.t[ijk] +
                   f2 * (a.g[i] * a.h[Dual3::hidx(j, k)] + a.g[j] * a.h[Dual3::hidx(i, k)] +
                         a.g[k] * a.h[Dual3::hidx(i, j)]) +
                   f3 * a.g[i] * a.g[j] * a.g[k];
      }
  return c;
}

inline Dual3 operator/(const Dual3& a, const Dual3& b) {
  const double iv = 1.0 / b.v;
  return a * chain(b, iv, -iv * iv, 2.0 * iv * iv * iv, -6.0 * iv * iv * iv * iv);
}

inline Dual3 operator+(const Dual3& a, double s) { Dual3 c = a; c.v += s; return c; }
inline Dual3 operator+(double s, const Dual3& a) { return a + s; }
inline Dual3 operator-(const Dual3& a, double s) { return a + (-s); }
inline Dual3 operator-(double s, const Dual3& a) { return (-a) + s; }
inline Dual3 operator*(const Dual3& a, double s) {
  Dual3 c;
  c.v = a.v * s;
  for (int i = 0; i < 3; ++i) c.g[i] = a.g[i] * s;
  for (int i = 0; i < 6; ++i) c.h[i] = a.h[i] * s;
  for (int i = 0; i < 10; ++i) c.t[i] = a.t[i] * s;
  return c;
}
inline Dual3 operator*(double s, const Dual3& a) { return a * s; }
inline Dual3 operator/(const Dual3& a, double s) { return a * (1.0 / s); }
inline Dual3 operator/(double s, const Dual3& b) {
  const double iv = 1.0 / b.v;
  return chain(b, s * iv, -s * iv * iv, 2.0 * s * iv * iv * iv,
               -6.0 * s * iv * iv * iv * iv);
}

inline Dual3 exp(const Dual3& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e, e);
}
inline Dual3 log(const Dual3& a) {
  const double iv = 1.0 / a.v;
  return chain(a, std::log(a.v), iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Dual3 log1p(const Dual3& a) {
  const double iv = 1.0 / (1.0 + a.v);
  return chain(a, std::log1p(a.v), iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Dual3 expm1(const Dual3& a) {
  const double e = std::exp(a.v);
  return chain(a, std::expm1(a.v), e, e, e);
}
inline Dual3 sqrt(const Dual3& a) {
  const double s = std::sqrt(a.v);
  const double iv = 1.0 / a.v;
  return chain(a, s, 0.5 * s * iv, -0.25 * s * iv * iv, 0.375 * s * iv * iv * iv);
}
inline Dual3 pow(const Dual3& a, double p) {
  const double f0 = std::pow(a.v, p);
  const double iv = 1.0 / a.v;
  return chain(a, f0, p * f0 * iv, p * (p - 1.0) * f0 * iv * iv,
               p * (p - 1.0) * (p - 2.0) * f0 * iv * iv * iv);
}
inline Dual3 norm_cdf(const Dual3& a) {
  const double pdf = norm_pdf(a.v);
  const double x = a.v;
  return chain(a, ordcop::norm_cdf(x), pdf, -x * pdf, (x * x - 1.0) * pdf);
}
inline Dual3 norm_quantile(const Dual3& a) {
  const double z = ordcop::norm_quantile(a.v);
  const double pdf = ordcop::norm_pdf(z);
  const double i1 = 1.0 / pdf;
  return chain(a, z, i1, z * i1 * i1, (1.0 + 2.0 * z * z) * i1 * i1 * i1);
}

}  // namespace ordcop
