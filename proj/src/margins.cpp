#include "ordcop/margins.hpp"

#include <cmath>
#include <set>

#include "ordcop/special.hpp"

namespace ordcop {

std::string ordinal_link_name(OrdinalLink link) {
  return link == OrdinalLink::Logit ? "logit" : "probit";
}

OrdinalLink ordinal_link_from_name(const std::string& name) {
  if (name == "logit") return OrdinalLink::Logit;
  if (name == "probit") return OrdinalLink::Probit;
  throw InputError("unknown ordinal link '" + name + "'");
}

std::string continuous_name(ContinuousFamily f) {
  switch (f) {
    case ContinuousFamily::LogNormal: return "lognormal";
    case ContinuousFamily::Normal: return "normal";
    case ContinuousFamily::Gamma: return "gamma";
  }
  return "?";
}

ContinuousFamily continuous_from_name(const std::string& name) {
  if (name == "lognormal") return ContinuousFamily::LogNormal;
  if (name == "normal" || name == "gaussian") return ContinuousFamily::Normal;
  if (name == "gamma") return ContinuousFamily::Gamma;
  throw InputError("unknown continuous margin '" + name + "'");
}

Vector expand_cutpoints(const Vector& theta_star) {
  Vector theta(theta_star.size());
  if (theta_star.size() == 0) return theta;
  theta[0] = theta_star[0];
  for (Index r = 1; r < theta_star.size(); ++r)
    theta[r] = theta[r - 1] + theta_star[r] * theta_star[r];
  return theta;
}

Vector collapse_cutpoints(const Vector& theta) {
  Vector star(theta.size());
  if (theta.size() == 0) return star;
  star[0] = theta[0];
  for (Index r = 1; r < theta.size(); ++r) {
    const double d = theta[r] - theta[r - 1];
    if (!(d > 0.0)) throw InputError("cut points must be strictly increasing");
    star[r] = std::sqrt(d);
  }
  return star;
}

Matrix cutpoint_jacobian(const Vector& theta_star) {
  const Index R = theta_star.size();
  Matrix J = Matrix::Zero(R, R);
  for (Index r = 0; r < R; ++r) {
    J(r, 0) = 1.0;
    for (Index k = 1; k <= r; ++k) J(r, k) = 2.0 * theta_star[k];
  }
  return J;
}

LinkBundle ordinal_link_eval(OrdinalLink link, double z) {
  LinkBundle b{};
  if (link == OrdinalLink::Probit) {
    b.F = norm_cdf(z);
    b.f = norm_pdf(z);
    b.df = -z * b.f;
    return b;
  }
  // logistic, evaluated on the stable side
  double F;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    F = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(z);
    F = e / (1.0 + e);
  }
  b.F = F;
  b.f = F * (1.0 - F);
  b.df = b.f * (1.0 - 2.0 * F);
  return b;
}

double ordinal_link_cdf(OrdinalLink link, double z) {
  return ordinal_link_eval(link, z).F;
}

double ordinal_link_quantile(OrdinalLink link, double p) {
  if (link == OrdinalLink::Probit) return norm_quantile(p);
  return std::log(p / (1.0 - p));
}

int validate_ordinal(const Vector& y1) {
  if (y1.size() == 0) throw InputError("ordinal response is empty");
  int max_cat = 0;
  std::set<int> seen;
  for (Index i = 0; i < y1.size(); ++i) {
    const double v = y1[i];
    if (!(v == std::floor(v)) || v < 1.0 || v > 1e6)
      throw InputError("ordinal response must contain integer codes >= 1 (row " +
                       std::to_string(i) + ")");
    const int c = static_cast<int>(v);
    seen.insert(c);
    if (c > max_cat) max_cat = c;
  }
  for (int c = 1; c <= max_cat; ++c)
    if (!seen.count(c))
      throw EmptyCategory("ordinal category " + std::to_string(c) +
                          " has no observations");
  if (max_cat < 2) throw InputError("ordinal response needs at least 2 categories");
  return max_cat;
}

namespace {

using D2 = Dual2<2>;

D2 lgamma_dual(const D2& a) {
  return chain(a, std::lgamma(a.v), digamma(a.v), trigamma(a.v));
}

}  // namespace

MarginBundle continuous_margin_eval(ContinuousFamily fam, double y, double eta_mu,
                                    double eta_sigma) {
  MarginBundle out{};
  const D2 A = D2::var(eta_mu, 0);
  const D2 B = D2::var(eta_sigma, 1);
  switch (fam) {
    case ContinuousFamily::LogNormal: {
      const D2 inv_sigma = exp(-1.0 * B);
      const D2 Z = (std::log(y) - A) * inv_sigma;
      out.F = norm_cdf(Z);
      out.f = norm_pdf(Z) * inv_sigma * (1.0 / y);
      out.mu = eta_mu;
      out.sigma = std::exp(eta_sigma);
      return out;
    }
    case ContinuousFamily::Normal: {
      const D2 inv_sigma = exp(-1.0 * B);
      const D2 Z = (y - A) * inv_sigma;
      out.F = norm_cdf(Z);
      out.f = norm_pdf(Z) * inv_sigma;
      out.mu = eta_mu;
      out.sigma = std::exp(eta_sigma);
      return out;
    }
    case ContinuousFamily::Gamma: {
      // shape alpha = exp(-2 eta_sigma), scale s = exp(eta_mu + 2 eta_sigma)
      const D2 alpha = exp(-2.0 * B);
      const D2 log_s = A + 2.0 * B;
      const D2 x = y * exp(-1.0 * log_s);
      const GammaPPartials gp = gamma_p_partials(alpha.v, x.v);
      out.F = compose2(alpha, x, gp.p, gp.dp_da, gp.dp_dx, gp.d2p_da2, gp.d2p_dxda,
                       gp.d2p_dx2);
      out.f = exp((alpha - 1.0) * std::log(y) - x - lgamma_dual(alpha) -
                  alpha * log_s);
      out.mu = std::exp(eta_mu);
      out.sigma = std::exp(eta_sigma);
      return out;
    }
  }
  throw Error("continuous_margin_eval: unexpected family");
}

double continuous_cdf(ContinuousFamily fam, double y, double eta_mu,
                      double eta_sigma) {
  switch (fam) {
    case ContinuousFamily::LogNormal:
      return norm_cdf((std::log(y) - eta_mu) * std::exp(-eta_sigma));
    case ContinuousFamily::Normal:
      return norm_cdf((y - eta_mu) * std::exp(-eta_sigma));
    case ContinuousFamily::Gamma:
      return gamma_p(std::exp(-2.0 * eta_sigma), y * std::exp(-eta_mu - 2.0 * eta_sigma));
  }
  return 0.0;
}

double continuous_pdf(ContinuousFamily fam, double y, double eta_mu,
                      double eta_sigma) {
  switch (fam) {
    case ContinuousFamily::LogNormal: {
      const double inv_sigma = std::exp(-eta_sigma);
      return norm_pdf((std::log(y) - eta_mu) * inv_sigma) * inv_sigma / y;
    }
    case ContinuousFamily::Normal: {
      const double inv_sigma = std::exp(-eta_sigma);
      return norm_pdf((y - eta_mu) * inv_sigma) * inv_sigma;
    }
    case ContinuousFamily::Gamma: {
      const double alpha = std::exp(-2.0 * eta_sigma);
      const double log_s = eta_mu + 2.0 * eta_sigma;
      const double x = y * std::exp(-log_s);
      return std::exp((alpha - 1.0) * std::log(y) - x - std::lgamma(alpha) -
                      alpha * log_s);
    }
  }
  return 0.0;
}

double continuous_quantile(ContinuousFamily fam, double p, double eta_mu,
                           double eta_sigma) {
  switch (fam) {
    case ContinuousFamily::LogNormal:
      return std::exp(eta_mu + std::exp(eta_sigma) * norm_quantile(p));
    case ContinuousFamily::Normal:
      return eta_mu + std::exp(eta_sigma) * norm_quantile(p);
    case ContinuousFamily::Gamma: {
      const double alpha = std::exp(-2.0 * eta_sigma);
      const double s = std::exp(eta_mu + 2.0 * eta_sigma);
      return s * gamma_p_inv(alpha, p);
    }
  }
  return 0.0;
}

void validate_support(ContinuousFamily fam, const Vector& y) {
  if (fam == ContinuousFamily::Normal) return;
  for (Index i = 0; i < y.size(); ++i)
    if (!(y[i] > 0.0))
      throw SupportViolation(continuous_name(fam) + " margin requires y > 0 (row " +
                             std::to_string(i) + ")");
}

}  // namespace ordcop
