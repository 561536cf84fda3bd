#include "ordcop/copula.hpp"

#include <cmath>
#include <vector>

#include "ordcop/dual.hpp"
#include "ordcop/quad.hpp"
#include "ordcop/special.hpp"

namespace ordcop {

namespace {

using std::exp;
using std::expm1;
using std::log;
using std::log1p;
using std::pow;
using std::sqrt;

// --- family kernels ---------------------------------------------------------
// Written once over a generic scalar T; instantiated with double for values
// and with dual types for derivative bundles. u, v are assumed clamped to the
// open unit interval and gamma validated before these are called.

template <typename T>
T clayton_kernel(const T& u, const T& v, const T& g) {
  const T x = exp(-1.0 * g * log(u));
  const T y = exp(-1.0 * g * log(v));
  return exp(-1.0 * log(x + y - 1.0) / g);
}

template <typename T>
T frank_kernel(const T& u, const T& v, const T& g) {
  const T em = expm1(-1.0 * g);
  const T a = expm1(-1.0 * g * u);
  const T b = expm1(-1.0 * g * v);
  return -1.0 * log1p(a * b / em) / g;
}

template <typename T>
T gumbel_kernel(const T& u, const T& v, const T& g) {
  const T lu = -1.0 * log(u);
  const T lv = -1.0 * log(v);
  const T s = exp(g * log(lu)) + exp(g * log(lv));
  return exp(-1.0 * exp(log(s) / g));
}

template <typename T>
T joe_kernel(const T& u, const T& v, const T& g) {
  const T x = 1.0 - u;
  const T y = 1.0 - v;
  const T xg = exp(g * log(x));
  const T yg = exp(g * log(y));
  const T s = xg + yg - xg * yg;
  return 1.0 - exp(log(s) / g);
}

template <typename T>
T fgm_kernel(const T& u, const T& v, const T& g) {
  return u * v * (1.0 + g * (1.0 - u) * (1.0 - v));
}

template <typename T>
T amh_kernel(const T& u, const T& v, const T& g) {
  return u * v / (1.0 - g * (1.0 - u) * (1.0 - v));
}

template <typename T>
T plackett_kernel(const T& u, const T& v, const T& g) {
  // Conjugate form 2 g u v / (s + sqrt(s^2 - 4 g (g-1) u v)); regular at g = 1.
  const T s = 1.0 + (g - 1.0) * (u + v);
  const T disc = s * s - 4.0 * g * (g - 1.0) * u * v;
  return 2.0 * g * u * v / (s + sqrt(disc));
}

// Gaussian conditional h(u, v; g) = Phi((Phi^-1(u) - g Phi^-1(v)) / sqrt(1-g^2)).
// The CDF itself has no elementary closed form and is handled separately.
template <typename T>
T gaussian_hfun(const T& u, const T& v, const T& g) {
  const T x = norm_quantile(u);
  const T y = norm_quantile(v);
  return norm_cdf((x - g * y) / sqrt(1.0 - g * g));
}

template <typename T>
T base_kernel(CopulaFamily f, const T& u, const T& v, const T& g) {
  switch (f) {
    case CopulaFamily::Clayton: return clayton_kernel(u, v, g);
    case CopulaFamily::Frank: return frank_kernel(u, v, g);
    case CopulaFamily::Gumbel: return gumbel_kernel(u, v, g);
    case CopulaFamily::Joe: return joe_kernel(u, v, g);
    case CopulaFamily::FGM: return fgm_kernel(u, v, g);
    case CopulaFamily::AMH: return amh_kernel(u, v, g);
    case CopulaFamily::Plackett: return plackett_kernel(u, v, g);
    case CopulaFamily::Gaussian: break;
  }
  throw Error("base_kernel: unexpected family");
}

// Survival rotation: C180(u,v) = u + v - 1 + C(1-u, 1-v).
template <typename T>
T rotated_kernel(CopulaFamily f, Rotation rot, const T& u, const T& v, const T& g) {
  if (rot == Rotation::R0) return base_kernel(f, u, v, g);
  return u + v - 1.0 + base_kernel(f, 1.0 - u, 1.0 - v, g);
}

double nudge_gamma(CopulaFamily f, double gamma) {
  // Frank is undefined at exactly 0; nudge to stay evaluable.
  if (f == CopulaFamily::Frank && std::fabs(gamma) < 1e-10)
    return gamma >= 0.0 ? 1e-10 : -1e-10;
  return gamma;
}

void check_gamma(CopulaFamily f, double gamma) {
  const auto [lo, hi] = gamma_range(f);
  if (!(gamma >= lo && gamma <= hi))
    throw OutOfRangeGamma(family_name(f) + ": dependence parameter " +
                          std::to_string(gamma) + " outside [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
}

void check_rotation(CopulaFamily f, Rotation rot) {
  if (!rotation_supported(f, rot))
    throw InputError(family_name(f) + ": 180-degree rotation not supported");
}

// Gaussian DerivBundle from the classical closed forms; the CDF value comes
// from the Genz algorithm.
DerivBundle gaussian_bundle(double u, double v, double g) {
  DerivBundle b{};
  const double x = norm_quantile(u);
  const double y = norm_quantile(v);
  const double s2 = 1.0 - g * g;
  const double s = std::sqrt(s2);
  const double fx = norm_pdf(x);
  const double fy = norm_pdf(y);
  const double wu = (y - g * x) / s;
  const double wv = (x - g * y) / s;
  const double f2 = bvn_pdf(x, y, g);
  b.C = bvn_cdf(x, y, g);
  b.dC_du = norm_cdf(wu);
  b.dC_dv = norm_cdf(wv);
  b.dC_dgamma = f2;
  b.d2C_dudv = f2 / (fx * fy);
  b.d2C_du2 = -norm_pdf(wu) * (g / s) / fx;
  b.d2C_dv2 = -norm_pdf(wv) * (g / s) / fy;
  b.d2C_dudgamma = -f2 * (x - g * y) / (s2 * fx);
  b.d2C_dvdgamma = -f2 * (y - g * x) / (s2 * fy);
  b.d2C_dgamma2 =
      f2 * (g * s2 - g * (x * x + y * y) + x * y * (1.0 + g * g)) / (s2 * s2);
  return b;
}

}  // namespace

bool rotation_supported(CopulaFamily f, Rotation r) {
  if (r == Rotation::R0) return true;
  return f == CopulaFamily::Clayton || f == CopulaFamily::Gumbel ||
         f == CopulaFamily::Joe;
}

std::string family_name(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Gaussian: return "gaussian";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Joe: return "joe";
    case CopulaFamily::FGM: return "fgm";
    case CopulaFamily::AMH: return "amh";
    case CopulaFamily::Plackett: return "plackett";
  }
  return "?";
}

CopulaFamily family_from_name(const std::string& name) {
  if (name == "gaussian" || name == "normal") return CopulaFamily::Gaussian;
  if (name == "clayton") return CopulaFamily::Clayton;
  if (name == "frank") return CopulaFamily::Frank;
  if (name == "gumbel") return CopulaFamily::Gumbel;
  if (name == "joe") return CopulaFamily::Joe;
  if (name == "fgm") return CopulaFamily::FGM;
  if (name == "amh") return CopulaFamily::AMH;
  if (name == "plackett") return CopulaFamily::Plackett;
  throw InputError("unknown copula family '" + name + "'");
}

std::pair<double, double> gamma_range(CopulaFamily f) {
  constexpr double one = 1.0 - 1e-12;
  constexpr double big = 1e308;
  switch (f) {
    case CopulaFamily::Gaussian: return {-one, one};
    case CopulaFamily::Clayton: return {range_eps, big};
    case CopulaFamily::Frank: return {-big, big};
    case CopulaFamily::Gumbel: return {1.0, big};
    case CopulaFamily::Joe: return {1.0 + 1e-12, big};
    case CopulaFamily::FGM: return {-1.0, 1.0};  // density stays >= 0 at |g| = 1
    case CopulaFamily::AMH: return {-1.0, one};
    case CopulaFamily::Plackett: return {range_eps, big};
  }
  return {0.0, 0.0};
}

double gamma_link(CopulaFamily f, double gamma) {
  check_gamma(f, gamma);
  switch (f) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::FGM:
    case CopulaFamily::AMH: return std::atanh(gamma);
    case CopulaFamily::Clayton:
    case CopulaFamily::Plackett: return std::log(gamma - range_eps);
    case CopulaFamily::Gumbel: return std::log(gamma - 1.0);
    case CopulaFamily::Joe: return std::log(gamma - 1.0 - range_eps);
    case CopulaFamily::Frank: return gamma - range_eps;
  }
  return 0.0;
}

double gamma_unlink(CopulaFamily f, double eta) {
  return gamma_unlink_chain(f, eta).gamma;
}

GammaChain gamma_unlink_chain(CopulaFamily f, double eta) {
  GammaChain c{};
  switch (f) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::FGM:
    case CopulaFamily::AMH: {
      const double t = std::tanh(eta);
      c.gamma = t;
      c.d1 = 1.0 - t * t;
      c.d2 = -2.0 * t * c.d1;
      return c;
    }
    case CopulaFamily::Clayton:
    case CopulaFamily::Plackett: {
      const double e = std::exp(eta);
      c.gamma = range_eps + e;
      c.d1 = e;
      c.d2 = e;
      return c;
    }
    case CopulaFamily::Gumbel: {
      const double e = std::exp(eta);
      c.gamma = 1.0 + e;
      c.d1 = e;
      c.d2 = e;
      return c;
    }
    case CopulaFamily::Joe: {
      const double e = std::exp(eta);
      c.gamma = 1.0 + range_eps + e;
      c.d1 = e;
      c.d2 = e;
      return c;
    }
    case CopulaFamily::Frank: {
      c.gamma = eta + range_eps;
      c.d1 = 1.0;
      c.d2 = 0.0;
      return c;
    }
  }
  return c;
}

double copula_cdf(CopulaFamily f, Rotation rot, double u, double v, double gamma) {
  check_rotation(f, rot);
  check_gamma(f, gamma);
  gamma = nudge_gamma(f, gamma);
  u = clamp_prob(u);
  v = clamp_prob(v);
  if (f == CopulaFamily::Gaussian)
    return bvn_cdf(norm_quantile(u), norm_quantile(v), gamma);
  return rotated_kernel(f, rot, u, v, gamma);
}

DerivBundle copula_derivatives(CopulaFamily f, Rotation rot, double u, double v,
                               double gamma) {
  check_rotation(f, rot);
  check_gamma(f, gamma);
  gamma = nudge_gamma(f, gamma);
  u = clamp_prob(u);
  v = clamp_prob(v);
  if (f == CopulaFamily::Gaussian) return gaussian_bundle(u, v, gamma);
  const Dual3 U = Dual3::var(u, 0), V = Dual3::var(v, 1), G = Dual3::var(gamma, 2);
  const Dual3 C = rotated_kernel(f, rot, U, V, G);
  DerivBundle b{};
  b.C = C.v;
  b.dC_du = C.g[0];
  b.dC_dv = C.g[1];
  b.dC_dgamma = C.g[2];
  b.d2C_du2 = C.hess(0, 0);
  b.d2C_dudv = C.hess(0, 1);
  b.d2C_dv2 = C.hess(1, 1);
  b.d2C_dudgamma = C.hess(0, 2);
  b.d2C_dvdgamma = C.hess(1, 2);
  b.d2C_dgamma2 = C.hess(2, 2);
  return b;
}

HBundle hfun_derivatives(CopulaFamily f, Rotation rot, double u, double v,
                         double gamma) {
  check_rotation(f, rot);
  check_gamma(f, gamma);
  gamma = nudge_gamma(f, gamma);
  u = clamp_prob(u);
  v = clamp_prob(v);
  HBundle b{};
  if (f == CopulaFamily::Gaussian) {
    using D = Dual2<3>;
    const D U = D::var(u, 0), V = D::var(v, 1), G = D::var(gamma, 2);
    const D H = gaussian_hfun(U, V, G);
    b.h = H.v;
    b.dh_du = H.g[0];
    b.dh_dv = H.g[1];
    b.dh_dgamma = H.g[2];
    b.d2h_du2 = H.hess(0, 0);
    b.d2h_dudv = H.hess(0, 1);
    b.d2h_dv2 = H.hess(1, 1);
    b.d2h_dudgamma = H.hess(0, 2);
    b.d2h_dvdgamma = H.hess(1, 2);
    b.d2h_dgamma2 = H.hess(2, 2);
    return b;
  }
  const Dual3 U = Dual3::var(u, 0), V = Dual3::var(v, 1), G = Dual3::var(gamma, 2);
  const Dual3 C = rotated_kernel(f, rot, U, V, G);
  b.h = C.g[1];
  b.dh_du = C.hess(0, 1);
  b.dh_dv = C.hess(1, 1);
  b.dh_dgamma = C.hess(1, 2);
  b.d2h_du2 = C.third(0, 0, 1);
  b.d2h_dudv = C.third(0, 1, 1);
  b.d2h_dv2 = C.third(1, 1, 1);
  b.d2h_dudgamma = C.third(0, 1, 2);
  b.d2h_dvdgamma = C.third(1, 1, 2);
  b.d2h_dgamma2 = C.third(1, 2, 2);
  return b;
}

namespace {

// Debye-type integral for Frank: D1(g) = (1/g) int_0^g t / (e^t - 1) dt, g > 0.
double debye1(double g) {
  const double val = adaptive_gk(
      [](double t) { return t < 1e-12 ? 1.0 - 0.5 * t : t / std::expm1(t); }, 0.0, g,
      1e-13, 1e-15);
  return val / g;
}

// Joe: D2(g) = int_0^1 t log(t) (1-t)^{2(1-g)/g} dt, rewritten with an
// algebraic substitution that removes the endpoint singularity:
// D2 = (g/2) int_0^1 n(w^{g/2}) dw with n(s) = (1-s) log1p(-s) / s.
double joe_d2(double g) {
  const double half_g = 0.5 * g;
  auto n = [](double s) {
    if (s < 1e-300) return -1.0;
    if (s >= 1.0) return 0.0;
    return (1.0 - s) * std::log1p(-s) / s;
  };
  const double val = adaptive_gk([&](double w) { return n(std::pow(w, half_g)); }, 0.0,
                                 1.0, 1e-13, 1e-15);
  return half_g * val;
}

double amh_tau(double g) {
  if (std::fabs(g) < 1e-3) {
    // Series expansion around independence; the closed form cancels badly.
    return g * (2.0 / 9.0 + g * (1.0 / 18.0 + g * (1.0 / 45.0 + g / 90.0)));
  }
  return 1.0 - 2.0 * (g + (1.0 - g) * (1.0 - g) * std::log1p(-g)) / (3.0 * g * g);
}

// Product of the two conditional CDFs dC/du * dC/dv; bounded on the closed
// square, unlike C * c which blows up under tail dependence.
double hprod(CopulaFamily f, Rotation rot, double u, double v, double gamma) {
  if (f == CopulaFamily::Gaussian) {
    const double x = norm_quantile(u), y = norm_quantile(v);
    const double s = std::sqrt(1.0 - gamma * gamma);
    return norm_cdf((y - gamma * x) / s) * norm_cdf((x - gamma * y) / s);
  }
  using D = Dual2<2>;
  const D U = D::var(u, 0), V = D::var(v, 1);
  const D G(gamma);
  const D C = rot == Rotation::R0
                  ? base_kernel(f, U, V, G)
                  : U + V - 1.0 + base_kernel(f, 1.0 - U, 1.0 - V, G);
  return C.grad(0) * C.grad(1);
}

}  // namespace

double tau_by_quadrature(CopulaFamily f, Rotation rot, double gamma, int n) {
  // tau = 4 E[C(U,V)] - 1 = 1 - 4 int dC/du dC/dv du dv after integrating by
  // parts; the second form keeps the integrand in [0,1]. Each axis is mapped
  // through the quintic smoothstep so corner derivative blow-ups (inverse-CDF
  // factors, tail dependence) are damped by the vanishing Jacobian.
  check_rotation(f, rot);
  check_gamma(f, gamma);
  gamma = nudge_gamma(f, gamma);
  const QuadRule& r = gauss_legendre_rule(n);
  std::vector<double> map(n), jac(n);
  for (int i = 0; i < n; ++i) {
    const double t = 0.5 * (1.0 + r.x[i]);
    map[i] = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    jac[i] = 30.0 * t * t * (1.0 - t) * (1.0 - t);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j)
      row += r.w[j] * jac[j] * hprod(f, rot, map[i], map[j], gamma);
    s += r.w[i] * jac[i] * row;
  }
  s *= 0.25;  // Jacobian of [-1,1]^2 -> (0,1)^2
  return 1.0 - 4.0 * s;
}

double kendall_tau(CopulaFamily f, double gamma) {
  check_gamma(f, gamma);
  switch (f) {
    case CopulaFamily::Gaussian: return 2.0 * std::asin(gamma) / pi;
    case CopulaFamily::Clayton: return gamma / (gamma + 2.0);
    case CopulaFamily::Gumbel: return 1.0 - 1.0 / gamma;
    case CopulaFamily::FGM: return 2.0 * gamma / 9.0;
    case CopulaFamily::AMH: return amh_tau(gamma);
    case CopulaFamily::Frank: {
      const double g = std::fabs(gamma);
      if (g < 1e-5) {
        const double t = gamma / 9.0 - gamma * gamma * gamma / 900.0;
        return t;
      }
      const double tau = 1.0 - 4.0 / g * (1.0 - debye1(g));
      return gamma > 0.0 ? tau : -tau;
    }
    case CopulaFamily::Joe: return 1.0 + 4.0 / (gamma * gamma) * joe_d2(gamma);
    case CopulaFamily::Plackett: return tau_by_quadrature(f, Rotation::R0, gamma, 64);
  }
  return 0.0;
}

namespace {

double bisect_tau(CopulaFamily f, double tau, double lo, double hi) {
  // tau(gamma) is strictly increasing for every family here.
  double flo = kendall_tau(f, lo) - tau;
  double fhi = kendall_tau(f, hi) - tau;
  if (flo > 0.0 || fhi < 0.0)
    throw UnattainableTau(family_name(f) + ": tau " + std::to_string(tau) +
                          " not attainable");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = kendall_tau(f, mid) - tau;
    if (std::fabs(fm) < 1e-10 || 0.5 * (hi - lo) < 1e-13 * (1.0 + std::fabs(mid)))
      return mid;
    if (fm > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double tau_to_gamma(CopulaFamily f, double tau) {
  if (!(tau > -1.0 && tau < 1.0))
    throw UnattainableTau("tau must lie in (-1, 1)");
  switch (f) {
    case CopulaFamily::Gaussian: return std::sin(0.5 * pi * tau);
    case CopulaFamily::Clayton:
      if (tau <= 0.0) throw UnattainableTau("clayton: tau must be positive");
      return 2.0 * tau / (1.0 - tau);
    case CopulaFamily::Gumbel:
      if (tau < 0.0) throw UnattainableTau("gumbel: tau must be nonnegative");
      return 1.0 / (1.0 - tau);
    case CopulaFamily::FGM:
      if (std::fabs(tau) > 2.0 / 9.0)
        throw UnattainableTau("fgm: |tau| must be <= 2/9");
      return 4.5 * tau;
    case CopulaFamily::AMH: {
      if (tau >= amh_tau(1.0 - 1e-12) || tau <= amh_tau(-1.0))
        throw UnattainableTau("amh: tau outside attainable range");
      return bisect_tau(f, tau, -1.0, 1.0 - 1e-12);
    }
    case CopulaFamily::Frank: {
      if (tau == 0.0) throw UnattainableTau("frank: tau must be nonzero");
      const double t = std::fabs(tau);
      const double g = bisect_tau(f, t, 1e-9, 3000.0);
      return tau > 0.0 ? g : -g;
    }
    case CopulaFamily::Joe: {
      if (tau <= 0.0) throw UnattainableTau("joe: tau must be positive");
      return bisect_tau(f, tau, 1.0 + 1e-12, 300.0);
    }
    case CopulaFamily::Plackett: {
      if (tau == 0.0) return 1.0;
      return bisect_tau(f, tau, 1e-5, 1e7);
    }
  }
  throw UnattainableTau("unknown family");
}

double tau_to_gamma_or_default(CopulaFamily f, double tau) {
  try {
    return tau_to_gamma(f, tau);
  } catch (const UnattainableTau&) {
    switch (f) {
      case CopulaFamily::Gaussian:
      case CopulaFamily::FGM:
      case CopulaFamily::AMH: return 0.0;
      case CopulaFamily::Clayton: return 1e-4;
      case CopulaFamily::Frank: return tau >= 0.0 ? 1e-4 : -1e-4;
      case CopulaFamily::Gumbel:
      case CopulaFamily::Joe: return 1.0 + 1e-4;
      case CopulaFamily::Plackett: return 1.0;
    }
    return 0.0;
  }
}

double hfun_inverse_given_u(CopulaFamily f, Rotation rot, double u, double w,
                            double gamma) {
  check_rotation(f, rot);
  check_gamma(f, gamma);
  u = clamp_prob(u);
  w = clamp_prob(w);
  if (f == CopulaFamily::Gaussian) {
    const double x = norm_quantile(u);
    const double z = norm_quantile(w);
    return norm_cdf(gamma * x + std::sqrt(1.0 - gamma * gamma) * z);
  }
  // P(V <= v | U = u) = hfun(v, u) by exchangeability; solve for v with a
  // safeguarded Newton iteration (density as derivative).
  double lo = prob_eps, hi = 1.0 - prob_eps;
  double v = w;  // independence start
  for (int it = 0; it < 200; ++it) {
    const HBundle hb = hfun_derivatives(f, rot, v, u, gamma);
    const double fv = hb.h - w;
    if (fv > 0.0)
      hi = v;
    else
      lo = v;
    double vn = v - fv / std::max(hb.dh_du, 1e-300);
    if (!(vn > lo && vn < hi)) vn = 0.5 * (lo + hi);
    if (std::fabs(vn - v) < 1e-14 && std::fabs(fv) < 1e-11) return vn;
    v = vn;
  }
  return v;
}

}  // namespace ordcop
