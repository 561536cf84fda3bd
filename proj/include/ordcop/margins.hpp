#pragma once

// Marginal building blocks: monotone cut-point reparameterization for the
// ordinal response, link CDFs for the latent variable, and continuous margins
// parameterized GAMLSS-style by (eta_mu, eta_sigma) with derivative bundles.

#include <string>

#include "ordcop/dual.hpp"
#include "ordcop/types.hpp"

namespace ordcop {

enum class OrdinalLink { Logit, Probit };
enum class ContinuousFamily { LogNormal, Normal, Gamma };

std::string ordinal_link_name(OrdinalLink link);
OrdinalLink ordinal_link_from_name(const std::string& name);
std::string continuous_name(ContinuousFamily f);
ContinuousFamily continuous_from_name(const std::string& name);

// theta_1 = theta*_1, theta_r = theta_{r-1} + (theta*_r)^2: unconstrained
// theta* always yields nondecreasing cut points.
Vector expand_cutpoints(const Vector& theta_star);
Vector collapse_cutpoints(const Vector& theta);
// J(r, k) = d theta_r / d theta*_k (lower triangular banded structure).
Matrix cutpoint_jacobian(const Vector& theta_star);

// Latent-error CDF F, density f = F', and f' at z.
struct LinkBundle {
  double F;
  double f;
  double df;
};
LinkBundle ordinal_link_eval(OrdinalLink link, double z);
double ordinal_link_cdf(OrdinalLink link, double z);
double ordinal_link_quantile(OrdinalLink link, double p);

// Checks the ordinal column: integer codes 1..n_cat, every category observed.
// Returns n_cat. Throws EmptyCategory / InputError.
int validate_ordinal(const Vector& y1);

// Continuous margin evaluated at y as a function of the two predictors.
// Parameter decoding: LogNormal mu = eta_mu (mean of log y), sigma = exp(eta_sigma);
// Normal mu = eta_mu, sigma = exp(eta_sigma); Gamma mean mu = exp(eta_mu) and
// sigma = exp(eta_sigma) with Var(Y) = (sigma mu)^2, i.e. shape 1/sigma^2 and
// scale sigma^2 mu.
struct MarginBundle {
  Dual2<2> F;  // CDF with partials in (eta_mu, eta_sigma)
  Dual2<2> f;  // density with partials
  double mu;
  double sigma;
};

MarginBundle continuous_margin_eval(ContinuousFamily fam, double y, double eta_mu,
                                    double eta_sigma);
double continuous_cdf(ContinuousFamily fam, double y, double eta_mu, double eta_sigma);
double continuous_pdf(ContinuousFamily fam, double y, double eta_mu, double eta_sigma);
double continuous_quantile(ContinuousFamily fam, double p, double eta_mu,
                           double eta_sigma);
// Throws SupportViolation if any y is outside the family support.
void validate_support(ContinuousFamily fam, const Vector& y);

}  // namespace ordcop
