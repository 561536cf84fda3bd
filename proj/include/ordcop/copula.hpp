#pragma once

// One-parameter bivariate copula families with rotation support, derivative
// bundles, Kendall's tau in both directions, and the link transforms that map
// the dependence parameter to an unconstrained scale.

#include <string>
#include <utility>

#include "ordcop/types.hpp"

namespace ordcop {

enum class CopulaFamily { Gaussian, Clayton, Frank, Gumbel, Joe, FGM, AMH, Plackett };

enum class Rotation { R0, R180 };

bool rotation_supported(CopulaFamily f, Rotation r);
std::string family_name(CopulaFamily f);
CopulaFamily family_from_name(const std::string& name);

// Admissible open range of the dependence parameter (validation bounds).
std::pair<double, double> gamma_range(CopulaFamily f);

// Unconstrained transform gamma* = link(gamma) and its inverse. The chain
// variant also returns d(gamma)/d(eta) and d^2(gamma)/d(eta)^2, the pieces the
// likelihood needs for the dependence predictor.
double gamma_link(CopulaFamily f, double gamma);
double gamma_unlink(CopulaFamily f, double eta);

struct GammaChain {
  double gamma;
  double d1;  // d gamma / d eta
  double d2;  // d^2 gamma / d eta^2
};
GammaChain gamma_unlink_chain(CopulaFamily f, double eta);

// C(u, v; gamma) and all first/second partial derivatives in (u, v, gamma).
struct DerivBundle {
  double C;
  double dC_du;
  double dC_dv;
  double dC_dgamma;
  double d2C_du2;
  double d2C_dudv;  // copula density
  double d2C_dv2;
  double d2C_dudgamma;
  double d2C_dvdgamma;
  double d2C_dgamma2;
};

// h(u, v; gamma) = dC/dv (conditional CDF of U given V = v) and all its
// first/second partials. Everything the log-likelihood gradient and Hessian
// consume from the copula lives here.
struct HBundle {
  double h;
  double dh_du;  // copula density
  double dh_dv;
  double dh_dgamma;
  double d2h_du2;
  double d2h_dudv;
  double d2h_dv2;
  double d2h_dudgamma;
  double d2h_dvdgamma;
  double d2h_dgamma2;
};

double copula_cdf(CopulaFamily f, Rotation rot, double u, double v, double gamma);
DerivBundle copula_derivatives(CopulaFamily f, Rotation rot, double u, double v,
                               double gamma);
HBundle hfun_derivatives(CopulaFamily f, Rotation rot, double u, double v,
                         double gamma);

// Kendall's tau as a function of gamma (rotation-invariant for the rotations
// supported here). Closed forms where available, otherwise quadrature.
double kendall_tau(CopulaFamily f, double gamma);

// tau = 1 - 4 int dC/du dC/dv du dv by tensor Gauss-Legendre quadrature;
// used for Plackett and as an independent cross-check of the closed forms.
double tau_by_quadrature(CopulaFamily f, Rotation rot, double gamma, int n = 64);

// Inverse of kendall_tau. Throws UnattainableTau outside the family's
// attainable tau set.
double tau_to_gamma(CopulaFamily f, double tau);

// Fallback used for starting values: tau_to_gamma if attainable, otherwise a
// family-specific near-independence value.
double tau_to_gamma_or_default(CopulaFamily f, double tau);

// Conditional inverse: solves h_{1|2}... given u, returns v with
// dC(u,v)/du = w. All families here are exchangeable, so the solver works on
// hfun with swapped arguments. Used by the simulation sampler.
double hfun_inverse_given_u(CopulaFamily f, Rotation rot, double u, double w,
                            double gamma);

}  // namespace ordcop
