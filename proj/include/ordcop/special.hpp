#pragma once

// Scalar special functions used by the copula and margin code. Everything here
// is deterministic and accurate to near machine precision; tests compare
// against independent quadrature / series oracles.

namespace ordcop {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;

double norm_pdf(double x);
double norm_cdf(double x);
// Inverse standard normal CDF (Wichura AS 241, ~1e-15 relative accuracy).
double norm_quantile(double p);

// P(X <= x, Y <= y) for a standard bivariate normal pair with correlation rho.
double bvn_cdf(double x, double y, double rho);
// Density of the standard bivariate normal at (x, y; rho).
double bvn_pdf(double x, double y, double rho);

double digamma(double x);
double trigamma(double x);

// Regularized lower incomplete gamma P(a, x) and the partial derivatives the
// margin code needs. dP/dx is elementary; dP/da has no elementary closed form
// and is evaluated by term-wise differentiation of the series (x < a + 1) or
// by a high-order stencil on the continued-fraction branch.
struct GammaPPartials {
  double p;       // P(a, x)
  double dp_dx;   // x^{a-1} e^{-x} / Gamma(a)
  double dp_da;
  double d2p_dx2;
  double d2p_dxda;
  double d2p_da2;
};

double gamma_p(double a, double x);
GammaPPartials gamma_p_partials(double a, double x);

// Inverse of P(a, .) for quantile evaluation; Newton with a Wilson-Hilferty
// start, safeguarded by bisection.
double gamma_p_inv(double a, double p);

}  // namespace ordcop
