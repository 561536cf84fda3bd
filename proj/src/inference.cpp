#include "ordcop/inference.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ordcop/copula.hpp"
#include "ordcop/margins.hpp"
#include "ordcop/special.hpp"

namespace ordcop {

namespace {

// margin parameter decoding, matching the conventions in margins.hpp
void decode_margin(ContinuousFamily fam, double eta_mu, double eta_sig,
                   double& mu, double& sigma) {
  mu = (fam == ContinuousFamily::Gamma) ? std::exp(eta_mu) : eta_mu;
  sigma = std::exp(eta_sig);
}

Vector eta_for(const DesignSet& ds, const Vector& beta, ParamId p,
               const Dataset& newdata) {
  const Matrix X = predictor_matrix(ds, p, newdata);
  return X * ds.coef(beta, p);
}

// C(u, v) with exact boundary behavior
double cdf_clamped(CopulaFamily f, Rotation rot, double u, double v, double gamma) {
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return std::min(v, 1.0);
  if (v >= 1.0) return u;
  return copula_cdf(f, rot, u, v, gamma);
}

void check_beta(const DesignSet& ds, const Vector& beta) {
  if (beta.size() != ds.total)
    throw InputError("coefficient vector length does not match the design");
}

}  // namespace

double Rng::uniform() {
  return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return norm_quantile(uniform()); }

double order_quantile(const Vector& values, double p) {
  if (values.size() == 0) throw InputError("quantile of an empty sample");
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  const double rank = std::ceil(p * static_cast<double>(v.size()));
  const auto idx = std::min<std::ptrdiff_t>(
      v.size() - 1, std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(rank) - 1));
  return v[static_cast<std::size_t>(idx)];
}

PosteriorDraws posterior_draws(const FitResult& fit, int n_sim, std::uint64_t seed,
                               std::vector<std::string>* warnings) {
  if (n_sim < 2) throw InputError("posterior simulation needs n_sim >= 2");
  const Index p = fit.beta.size();
  const Matrix V = 0.5 * (fit.V_bayes + fit.V_bayes.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(V);
  const Vector ev = eig.eigenvalues();
  const double top = std::max(0.0, ev.maxCoeff());
  if (ev.minCoeff() < -1e-8 * (1.0 + top) && warnings)
    warnings->push_back(
        "posterior covariance has negative eigenvalues; clamped to zero");
  const Matrix root =
      eig.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();

  PosteriorDraws out;
  out.seed = seed;
  out.draws.resize(n_sim, p);
  Rng rng(seed);
  Vector z(p);
  for (int m = 0; m < n_sim; ++m) {
    for (Index k = 0; k < p; ++k) z[k] = rng.normal();
    out.draws.row(m) = (fit.beta + root * z).transpose();
  }
  return out;
}

Interval ci_from_draws(const Vector& realizations, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("level must be in (0,1)");
  const double zeta = 1.0 - level;
  Interval ci;
  ci.lo = order_quantile(realizations, zeta / 2.0);
  ci.hi = order_quantile(realizations, 1.0 - zeta / 2.0);
  return ci;
}

Interval ci_functional(const FitResult& fit,
                       const std::function<double(const Vector&)>& functional,
                       int n_sim, double level, std::uint64_t seed,
                       std::vector<std::string>* warnings) {
  const PosteriorDraws pd = posterior_draws(fit, n_sim, seed, warnings);
  Vector r(n_sim);
  for (int m = 0; m < n_sim; ++m) r[m] = functional(Vector(pd.draws.row(m)));
  return ci_from_draws(r, level);
}

PredictionTable predict(const DesignSet& ds, const Vector& beta,
                        const Dataset& newdata) {
  check_beta(ds, beta);
  PredictionTable out;
  const Index n = newdata.n_rows();
  out.eta.resize(n, 4);
  out.eta.col(0) = eta_for(ds, beta, ParamId::Mu1, newdata);
  out.eta.col(1) = eta_for(ds, beta, ParamId::Mu2, newdata);
  out.eta.col(2) = eta_for(ds, beta, ParamId::Sigma2, newdata);
  out.eta.col(3) = eta_for(ds, beta, ParamId::Gamma, newdata);

  const Vector theta = expand_cutpoints(beta.head(ds.n_cut()));
  out.cat_probs.resize(n, ds.n_cat);
  out.mu2.resize(n);
  out.sigma2.resize(n);
  out.gamma.resize(n);
  out.tau.resize(n);
  for (Index i = 0; i < n; ++i) {
    double prev = 0.0;
    for (int r = 1; r < ds.n_cat; ++r) {
      const double F = ordinal_link_cdf(ds.link, theta[r - 1] - out.eta(i, 0));
      out.cat_probs(i, r - 1) = F - prev;
      prev = F;
    }
    out.cat_probs(i, ds.n_cat - 1) = 1.0 - prev;
    decode_margin(ds.margin, out.eta(i, 1), out.eta(i, 2), out.mu2[i],
                  out.sigma2[i]);
    out.gamma[i] = gamma_unlink(ds.family, out.eta(i, 3));
    out.tau[i] = kendall_tau(ds.family, out.gamma[i]);
  }
  return out;
}

Vector joint_probability(const DesignSet& ds, const Vector& beta,
                         const Dataset& newdata, int r, double y2) {
  check_beta(ds, beta);
  if (r < 1 || r > ds.n_cat) throw InputError("category out of range");
  const Vector eta1 = eta_for(ds, beta, ParamId::Mu1, newdata);
  const Vector eta_mu2 = eta_for(ds, beta, ParamId::Mu2, newdata);
  const Vector eta_sig2 = eta_for(ds, beta, ParamId::Sigma2, newdata);
  const Vector eta_gam = eta_for(ds, beta, ParamId::Gamma, newdata);
  const Vector theta = expand_cutpoints(beta.head(ds.n_cut()));

  Vector out(newdata.n_rows());
  for (Index i = 0; i < out.size(); ++i) {
    const double u = (r == ds.n_cat)
                         ? 1.0
                         : ordinal_link_cdf(ds.link, theta[r - 1] - eta1[i]);
    const double v = continuous_cdf(ds.margin, y2, eta_mu2[i], eta_sig2[i]);
    const double gam = gamma_unlink(ds.family, eta_gam[i]);
    out[i] = cdf_clamped(ds.family, ds.rotation, u, v, gam);
  }
  return out;
}

std::function<double(const Vector&)> tau_functional(const DesignSet& ds,
                                                    const Dataset& newdata,
                                                    Index row) {
  const Vector xg = predictor_matrix(ds, ParamId::Gamma, newdata).row(row);
  const CopulaFamily fam = ds.family;
  const Index off = ds.block(ParamId::Gamma).offset;
  const Index sz = ds.block(ParamId::Gamma).size;
  return [xg, fam, off, sz](const Vector& beta) {
    return kendall_tau(fam, gamma_unlink(fam, xg.dot(beta.segment(off, sz))));
  };
}

std::function<double(const Vector&)> joint_prob_functional(const DesignSet& ds,
                                                           const Dataset& newdata,
                                                           Index row, int r,
                                                           double y2) {
  if (r < 1 || r > ds.n_cat) throw InputError("category out of range");
  const Vector x1 = predictor_matrix(ds, ParamId::Mu1, newdata).row(row);
  const Vector x2 = predictor_matrix(ds, ParamId::Mu2, newdata).row(row);
  const Vector xs = predictor_matrix(ds, ParamId::Sigma2, newdata).row(row);
  const Vector xg = predictor_matrix(ds, ParamId::Gamma, newdata).row(row);
  const DesignSet* d = &ds;
  return [x1, x2, xs, xg, d, r, y2](const Vector& beta) {
    const Vector theta = expand_cutpoints(beta.head(d->n_cut()));
    const double u =
        (r == d->n_cat)
            ? 1.0
            : ordinal_link_cdf(d->link,
                               theta[r - 1] - x1.dot(d->coef(beta, ParamId::Mu1)));
    const double v = continuous_cdf(d->margin, y2,
                                    x2.dot(d->coef(beta, ParamId::Mu2)),
                                    xs.dot(d->coef(beta, ParamId::Sigma2)));
    const double gam =
        gamma_unlink(d->family, xg.dot(d->coef(beta, ParamId::Gamma)));
    return cdf_clamped(d->family, d->rotation, u, v, gam);
  };
}

double relative_poverty_line(const Vector& y2, double frac) {
  std::vector<double> v(y2.data(), y2.data() + y2.size());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.empty()) throw InputError("poverty line of an empty sample");
  const std::size_t n = v.size();
  const double med =
      (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return frac * med;
}

VulnerabilityReport classify_vulnerable(const DesignSet& ds, const Vector& beta,
                                        const Dataset& data, int educ_threshold,
                                        double income_threshold,
                                        double prob_threshold,
                                        std::vector<std::string>* warnings) {
  if (data.n_rows() != ds.n_obs())
    throw InputError("vulnerability classification runs on the training rows");
  VulnerabilityReport rep;
  rep.prob = joint_probability(ds, beta, data, educ_threshold, income_threshold);
  const Index n = rep.prob.size();
  rep.flagged.assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    const bool flag = rep.prob[i] >= prob_threshold;
    const bool poor = ds.y1[i] <= educ_threshold && ds.y2[i] <= income_threshold;
    rep.flagged[i] = flag ? 1 : 0;
    rep.n_flagged += flag;
    rep.n_poor += poor;
    rep.n_hit += flag && poor;
  }
  if (rep.n_poor == 0 || rep.n_flagged == 0) {
    rep.specificity = std::numeric_limits<double>::quiet_NaN();
    if (warnings)
      warnings->push_back(
          "specificity undefined: no realized-poor or no flagged rows");
  } else {
    rep.specificity = static_cast<double>(rep.n_hit) / rep.n_poor;
  }
  return rep;
}

ResidualSet residuals(const DesignSet& ds, const Vector& beta, std::uint64_t seed) {
  check_beta(ds, beta);
  const Index n = ds.n_obs();
  ResidualSet out;
  out.seed = seed;
  out.q2.resize(n);
  out.q1.resize(n);
  out.q2_cond.resize(n);
  out.chisq.resize(n);

  const Vector theta = expand_cutpoints(beta.head(ds.n_cut()));
  const Vector eta1 = ds.block(ParamId::Mu1).X * ds.coef(beta, ParamId::Mu1);
  const Vector eta_mu2 = ds.block(ParamId::Mu2).X * ds.coef(beta, ParamId::Mu2);
  const Vector eta_sig2 =
      ds.block(ParamId::Sigma2).X * ds.coef(beta, ParamId::Sigma2);
  const Vector eta_gam = ds.block(ParamId::Gamma).X * ds.coef(beta, ParamId::Gamma);

  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    const int r = ds.y1[i];
    const double lo =
        (r == 1) ? 0.0 : ordinal_link_cdf(ds.link, theta[r - 2] - eta1[i]);
    const double hi = (r == ds.n_cat)
                          ? 1.0
                          : ordinal_link_cdf(ds.link, theta[r - 1] - eta1[i]);
    const double v =
        continuous_cdf(ds.margin, ds.y2[i], eta_mu2[i], eta_sig2[i]);
    out.q2[i] = norm_quantile(clamp_prob(v));

    const double t = rng.uniform();
    out.q1[i] = norm_quantile(clamp_prob(lo + t * (hi - lo)));

    const double gam = gamma_unlink(ds.family, eta_gam[i]);
    const double chi = cdf_clamped(ds.family, ds.rotation, hi, v, gam);
    const double clo = cdf_clamped(ds.family, ds.rotation, lo, v, gam);
    const double denom = std::max(hi - lo, 1e-300);
    const double cond = std::min(1.0, std::max(0.0, (chi - clo) / denom));
    out.q2_cond[i] = norm_quantile(clamp_prob(cond));
    out.chisq[i] = out.q1[i] * out.q1[i] + out.q2_cond[i] * out.q2_cond[i];
  }
  return out;
}

Matrix qq_reference_band(int n, RefDist dist, int n_rep, double level,
                         std::uint64_t seed) {
  if (n < 1 || n_rep < 2) throw InputError("reference band needs n >= 1, n_rep >= 2");
  auto qfun = [dist](double p) {
    return dist == RefDist::Normal ? norm_quantile(p) : -2.0 * std::log1p(-p);
  };
  Matrix samples(n_rep, n);
  Rng rng(seed);
  std::vector<double> row(n);
  for (int m = 0; m < n_rep; ++m) {
    for (int i = 0; i < n; ++i) row[i] = qfun(rng.uniform());
    std::sort(row.begin(), row.end());
    for (int i = 0; i < n; ++i) samples(m, i) = row[i];
  }
  Matrix out(n, 3);
  const double zeta = 1.0 - level;
  for (int i = 0; i < n; ++i) {
    out(i, 0) = qfun((i + 0.5) / n);
    const Vector col = samples.col(i);
    out(i, 1) = order_quantile(col, zeta / 2.0);
    out(i, 2) = order_quantile(col, 1.0 - zeta / 2.0);
  }
  return out;
}

double ks_statistic(Vector sample, const std::function<double(double)>& cdf) {
  const Index n = sample.size();
  if (n < 1) throw InputError("KS test of an empty sample");
  std::sort(sample.data(), sample.data() + n);
  double d = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double F = cdf(sample[i]);
    d = std::max(d, std::fabs(F - static_cast<double>(i + 1) / n));
    d = std::max(d, std::fabs(F - static_cast<double>(i) / n));
  }
  return d;
}

double ks_pvalue(double stat, int n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * stat;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term =
        2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-12 * std::fabs(sum)) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

double ks_normal_pvalue(const Vector& sample) {
  const double d = ks_statistic(sample, [](double x) { return norm_cdf(x); });
  return ks_pvalue(d, static_cast<int>(sample.size()));
}

}  // namespace ordcop
