#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ordcop/copula.hpp"
#include "ordcop/dataset.hpp"
#include "ordcop/design.hpp"
#include "ordcop/estimator.hpp"
#include "ordcop/inference.hpp"
#include "ordcop/margins.hpp"
#include "ordcop/special.hpp"
#include "ordcop/types.hpp"

using namespace ordcop;

namespace {

ModelSpec gauss_spec() {
  return parse_model_config(
      "[model]\nordinal = y1\ncontinuous = y2\ncopula = gaussian\n"
      "margin = lognormal\nlink = logit\n"
      "[param.mu1]\nlinear x1\n[param.mu2]\nlinear x2\n[param.sigma2]\n"
      "[param.gamma]\nlinear x1\n");
}

// one draw from the model itself, the independent oracle for residual checks
void draw_obs(OrdinalLink link, ContinuousFamily margin, const Vector& theta,
              double eta1, double eta_mu2, double eta_sig2, double gamma,
              std::mt19937_64& eng, int& y1, double& y2) {
  std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
  const double v = unif(eng);
  const double w = unif(eng);
  y2 = continuous_quantile(margin, v, eta_mu2, eta_sig2);
  const double u =
      hfun_inverse_given_u(CopulaFamily::Gaussian, Rotation::R0, v, w, gamma);
  y1 = 1;
  for (Index k = 0; k < theta.size(); ++k)
    if (u > ordinal_link_cdf(link, theta[k] - eta1)) ++y1;
}

Dataset simulate(int n, double gamma_coef, unsigned seed, const Vector& theta,
                 const Vector& beta_like) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::vector<std::string> y1s, y2s, x1s, x2s;
  for (int i = 0; i < n; ++i) {
    const double a = ux(eng), b = ux(eng);
    const double gam = std::tanh(beta_like[6] + gamma_coef * a);
    int y1;
    double y2;
    draw_obs(OrdinalLink::Logit, ContinuousFamily::LogNormal, theta,
             beta_like[2] * a, beta_like[3] + beta_like[4] * b, beta_like[5], gam,
             eng, y1, y2);
    y1s.push_back(std::to_string(y1));
    y2s.push_back(format_double(y2));
    x1s.push_back(format_double(a));
    x2s.push_back(format_double(b));
  }
  return Dataset({"y1", "y2", "x1", "x2"}, {y1s, y2s, x1s, x2s});
}

FitResult synthetic_fit(const Vector& beta, const Matrix& V) {
  FitResult f;
  f.beta = beta;
  f.V_bayes = V;
  f.V_freq = V;
  f.converged = true;
  return f;
}

}  // namespace

TEST_CASE("rng stream: reproducible, open-interval uniforms, inverse-cdf normals") {
  Rng a(42), b(42), c(7);
  bool differ = false;
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    if (u != c.uniform()) differ = true;
  }
  CHECK(differ);
  Rng d(3);
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = d.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s / n) < 0.03);
  CHECK(std::fabs(s2 / n - 1.0) < 0.04);
}

TEST_CASE("order quantile: order statistics, exact monotone equivariance") {
  Vector v(3);
  v << 3.0, 1.0, 2.0;
  CHECK(order_quantile(v, 0.5) == 2.0);
  CHECK(order_quantile(v, 0.0) == 1.0);
  CHECK(order_quantile(v, 1.0) == 3.0);
  CHECK(order_quantile(v, 0.34) == 2.0);
  CHECK(order_quantile(v, 0.33) == 1.0);

  std::mt19937_64 eng(11);
  std::normal_distribution<double> gauss;
  Vector x(101);
  for (Index i = 0; i < x.size(); ++i) x[i] = gauss(eng);
  const Vector ex = x.array().exp();
  for (double p : {0.025, 0.1, 0.5, 0.9, 0.975})
    CHECK(order_quantile(ex, p) == std::exp(order_quantile(x, p)));
}

TEST_CASE("posterior draws: degenerate covariance and law of large numbers") {
  Vector beta(3);
  beta << 1.0, -2.0, 0.5;
  const FitResult degen = synthetic_fit(beta, Matrix::Zero(3, 3));
  const PosteriorDraws pd0 = posterior_draws(degen, 50, 9);
  for (int m = 0; m < 50; ++m)
    CHECK((pd0.draws.row(m).transpose() - beta).cwiseAbs().maxCoeff() == 0.0);

  Matrix V(3, 3);
  V << 0.5, 0.2, 0.0, 0.2, 0.4, -0.1, 0.0, -0.1, 0.3;
  const FitResult fit = synthetic_fit(beta, V);
  const int n_sim = 10000;
  const PosteriorDraws pd = posterior_draws(fit, n_sim, 123);
  const Vector mean = pd.draws.colwise().mean();
  for (int k = 0; k < 3; ++k)
    CHECK(std::fabs(mean[k] - beta[k]) < 3.0 * std::sqrt(V(k, k) / n_sim));
  const Matrix centered = pd.draws.rowwise() - mean.transpose();
  const Matrix S = centered.transpose() * centered / (n_sim - 1);
  CHECK((S - V).cwiseAbs().maxCoeff() < 0.05);

  // indefinite input is clamped with a warning
  Matrix bad = V;
  bad(2, 2) = -0.3;
  std::vector<std::string> warn;
  posterior_draws(synthetic_fit(beta, bad), 10, 1, &warn);
  REQUIRE(warn.size() == 1);
  CHECK(warn[0].find("clamped") != std::string::npos);

  CHECK_THROWS_AS(posterior_draws(fit, 1, 5), InputError);
}

TEST_CASE("ci_functional: analytic normal quantiles and equivariance") {
  Vector beta(2);
  beta << 0.7, -0.3;
  Matrix V(2, 2);
  V << 0.09, 0.03, 0.03, 0.16;
  const FitResult fit = synthetic_fit(beta, V);
  Vector c(2);
  c << 1.0, 2.0;
  auto lin = [&](const Vector& b) { return c.dot(b); };
  const double mu = c.dot(beta);
  const double sd = std::sqrt(c.dot(V * c));

  const Interval ci = ci_functional(fit, lin, 10000, 0.95, 31);
  CHECK(std::fabs(ci.lo - (mu - 1.959964 * sd)) < 0.12 * sd);
  CHECK(std::fabs(ci.hi - (mu + 1.959964 * sd)) < 0.12 * sd);
  CHECK(ci.lo < ci.hi);

  // the same draws through exp: interval maps exactly
  auto expo = [&](const Vector& b) { return std::exp(c.dot(b)); };
  const Interval ce = ci_functional(fit, expo, 10000, 0.95, 31);
  CHECK(ce.lo == std::exp(ci.lo));
  CHECK(ce.hi == std::exp(ci.hi));

  // degenerate covariance collapses to the point value
  const Interval cp = ci_functional(synthetic_fit(beta, Matrix::Zero(2, 2)), lin,
                                    100, 0.95, 4);
  CHECK(cp.lo == mu);
  CHECK(cp.hi == mu);
}

TEST_CASE("predict: training consistency, unit row sums, tau decoding") {
  Vector theta(2);
  theta << -0.7, 0.9;
  Vector bl(7);
  bl << 0.0, 0.0, 0.8, 0.3, 0.5, -0.4, 0.55;
  const Dataset data = simulate(300, 0.4, 21, theta, bl);
  const DesignSet ds = build_design(gauss_spec(), data);
  REQUIRE(ds.total == 8);
  Vector beta(8);
  beta << -0.3, 0.8, 0.4, 0.15, 0.3, -0.2, 0.3, 0.25;

  const PredictionTable pt = predict(ds, beta, data);
  for (int p = 0; p < 4; ++p) {
    const auto pid = static_cast<ParamId>(p);
    const Vector eta = ds.block(pid).X * ds.coef(beta, pid);
    CHECK((pt.eta.col(p) - eta).cwiseAbs().maxCoeff() < 1e-14);
  }
  for (Index i = 0; i < data.n_rows(); ++i) {
    CHECK(std::fabs(pt.cat_probs.row(i).sum() - 1.0) < 1e-12);
    CHECK(pt.cat_probs.row(i).minCoeff() >= 0.0);
    CHECK(pt.gamma[i] == std::tanh(pt.eta(i, 3)));
    CHECK(pt.tau[i] ==
          doctest::Approx(kendall_tau(CopulaFamily::Gaussian, pt.gamma[i]))
              .epsilon(1e-12));
    CHECK(pt.sigma2[i] == std::exp(pt.eta(i, 2)));
    CHECK(pt.mu2[i] == pt.eta(i, 1));
  }

  // gamma predictor at zero: tau is exactly zero
  Vector b0 = beta;
  b0[6] = b0[7] = 0.0;
  const PredictionTable p0 = predict(ds, b0, data);
  CHECK(p0.tau.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p0.gamma.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(predict(ds, Vector::Zero(3), data), InputError);
}

TEST_CASE("joint probability: independence product, bounds, bivariate-normal oracle") {
  Vector theta(2);
  theta << -0.7, 0.9;
  Vector bl(7);
  bl << 0.0, 0.0, 0.8, 0.3, 0.5, -0.4, 0.55;
  const Dataset data = simulate(40, 0.4, 22, theta, bl);
  const DesignSet ds = build_design(gauss_spec(), data);
  Vector beta(8);
  beta << -0.3, 0.8, 0.4, 0.15, 0.3, -0.2, 0.3, 0.25;

  // independence: product of the margins
  Vector bind = beta;
  bind[6] = bind[7] = 0.0;
  const Vector th = expand_cutpoints(beta.head(2));
  for (int r = 1; r <= 3; ++r) {
    for (double y2 : {0.4, 1.0, 2.5}) {
      const Vector jp = joint_probability(ds, bind, data, r, y2);
      const PredictionTable pt = predict(ds, bind, data);
      for (Index i = 0; i < data.n_rows(); ++i) {
        const double u =
            (r == 3) ? 1.0
                     : ordinal_link_cdf(OrdinalLink::Logit, th[r - 1] - pt.eta(i, 0));
        const double v =
            continuous_cdf(ContinuousFamily::LogNormal, y2, pt.eta(i, 1), pt.eta(i, 2));
        CHECK(jp[i] == doctest::Approx(u * v).epsilon(1e-10));
      }
    }
  }

  // top category and a huge response exhaust the distribution
  const Vector one = joint_probability(ds, beta, data, 3, 1e12);
  CHECK((one.array() - 1.0).abs().maxCoeff() < 1e-9);

  // strong positive dependence: Frechet bounds, positive quadrant dependence,
  // agreement with the bivariate normal CDF
  Vector bdep = beta;
  bdep[6] = std::atanh(0.9);
  bdep[7] = 0.0;
  double prev_r[3] = {-1.0, -1.0, -1.0};
  for (int r = 1; r <= 3; ++r) {
    double prev_y = -1.0;
    for (double y2 : {0.3, 0.8, 1.5, 4.0}) {
      const Vector jp = joint_probability(ds, bdep, data, r, y2);
      const PredictionTable pt = predict(ds, bdep, data);
      for (Index i = 0; i < 10; ++i) {
        const double u =
            (r == 3) ? 1.0
                     : ordinal_link_cdf(OrdinalLink::Logit, th[r - 1] - pt.eta(i, 0));
        const double v =
            continuous_cdf(ContinuousFamily::LogNormal, y2, pt.eta(i, 1), pt.eta(i, 2));
        CHECK(jp[i] >= std::max(u + v - 1.0, 0.0) - 1e-12);
        CHECK(jp[i] <= std::min(u, v) + 1e-12);
        CHECK(jp[i] >= u * v - 1e-12);
        if (r < 3 && u > 1e-12 && u < 1.0 - 1e-12 && v > 1e-12 && v < 1.0 - 1e-12) {
          const double oracle =
              bvn_cdf(norm_quantile(u), norm_quantile(v), 0.9);
          CHECK(jp[i] == doctest::Approx(oracle).epsilon(1e-7));
        }
      }
      // monotone in y2 (row 0)
      CHECK(jp[0] >= prev_y - 1e-12);
      prev_y = jp[0];
    }
    CHECK(prev_y >= prev_r[0] - 1e-12);
    prev_r[0] = prev_y;
  }

  CHECK_THROWS_AS(joint_probability(ds, beta, data, 0, 1.0), InputError);
  CHECK_THROWS_AS(joint_probability(ds, beta, data, 4, 1.0), InputError);
}

TEST_CASE("functional builders match the direct computations at the estimate") {
  Vector theta(2);
  theta << -0.7, 0.9;
  Vector bl(7);
  bl << 0.0, 0.0, 0.8, 0.3, 0.5, -0.4, 0.55;
  const Dataset data = simulate(25, 0.4, 23, theta, bl);
  const DesignSet ds = build_design(gauss_spec(), data);
  Vector beta(8);
  beta << -0.3, 0.8, 0.4, 0.15, 0.3, -0.2, 0.3, 0.25;
  const PredictionTable pt = predict(ds, beta, data);
  for (Index row : {Index(0), Index(7), Index(24)}) {
    CHECK(tau_functional(ds, data, row)(beta) ==
          doctest::Approx(pt.tau[row]).epsilon(1e-12));
    const Vector jp = joint_probability(ds, beta, data, 2, 1.3);
    CHECK(joint_prob_functional(ds, data, row, 2, 1.3)(beta) ==
          doctest::Approx(jp[row]).epsilon(1e-12));
  }
}

TEST_CASE("relative poverty line: 60 percent of the median of distinct values") {
  Vector a(4);
  a << 1.0, 2.0, 3.0, 100.0;
  CHECK(relative_poverty_line(a) == doctest::Approx(0.6 * 2.5));
  Vector b(5);
  b << 1.0, 1.0, 1.0, 2.0, 3.0;
  CHECK(relative_poverty_line(b) == doctest::Approx(0.6 * 2.0));
  CHECK(relative_poverty_line(b, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("vulnerability classification: thresholds, bookkeeping, dependence edge") {
  Vector theta(2);
  theta << -0.7, 0.9;
  Vector bl(7);
  bl << 0.0, 0.0, 0.8, 0.3, 0.5, -0.4, std::atanh(0.8);
  const Dataset data = simulate(4000, 0.0, 29, theta, bl);
  const DesignSet ds = build_design(gauss_spec(), data);
  // truth on the coefficient scale: cuts, x1 slope, mu2, sigma2, gamma
  Vector beta(8);
  beta << collapse_cutpoints(theta)[0], collapse_cutpoints(theta)[1], 0.8, 0.3,
      0.5, -0.4, std::atanh(0.8), 0.0;

  const double line = relative_poverty_line(ds.y2);
  const VulnerabilityReport all =
      classify_vulnerable(ds, beta, data, 1, line, 0.0);
  CHECK(all.n_flagged == 4000);
  CHECK(all.n_hit == all.n_poor);
  CHECK(all.specificity == 1.0);

  std::vector<std::string> warn;
  const VulnerabilityReport none =
      classify_vulnerable(ds, beta, data, 1, line, 1.0 + 1e-9, &warn);
  CHECK(none.n_flagged == 0);
  CHECK(std::isnan(none.specificity));
  CHECK(warn.size() == 1);

  // with real dependence, the copula probabilities rank the actually-poor rows
  // better than the independence model
  Vector bind = beta;
  bind[6] = 0.0;
  const VulnerabilityReport cop =
      classify_vulnerable(ds, beta, data, 1, line, 0.1);
  const VulnerabilityReport ind =
      classify_vulnerable(ds, bind, data, 1, line, 0.1);
  REQUIRE(cop.n_poor == ind.n_poor);
  REQUIRE(cop.n_poor > 20);
  CHECK(cop.specificity >= ind.specificity - 1e-12);

  // internal consistency of counts
  int flagged = 0;
  for (Index i = 0; i < 4000; ++i) flagged += cop.flagged[i];
  CHECK(flagged == cop.n_flagged);
  CHECK(cop.n_hit <= cop.n_poor);
  CHECK(cop.n_hit <= cop.n_flagged);
}

TEST_CASE("residuals: anchors, independence identity, seeded reproducibility") {
  Vector theta(2);
  theta << -0.7, 0.9;
  Vector bl(7);
  bl << 0.0, 0.0, 0.8, 0.3, 0.5, -0.4, 0.55;
  const Dataset data = simulate(60, 0.4, 33, theta, bl);
  const DesignSet ds = build_design(gauss_spec(), data);
  Vector beta(8);
  beta << -0.3, 0.8, 0.4, 0.15, 0.3, -0.2, 0.3, 0.25;

  const ResidualSet rs = residuals(ds, beta, 77);
  const ResidualSet rs2 = residuals(ds, beta, 77);
  CHECK((rs.q1.array() == rs2.q1.array()).all());
  const ResidualSet rs3 = residuals(ds, beta, 78);
  CHECK_FALSE((rs.q1.array() == rs3.q1.array()).all());
  CHECK((rs.chisq.array() >= 0.0).all());
  CHECK((rs.chisq - (rs.q1.array().square() + rs.q2_cond.array().square()).matrix())
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  // median response row: q2 exactly zero for the lognormal margin
  {
    std::vector<std::string> y1s{"1", "2", "3"}, y2s, x1s{"0", "0", "0"},
        x2s{"0", "0", "0"};
    const double eta_mu2 = 0.15;
    for (int i = 0; i < 3; ++i) y2s.push_back(format_double(std::exp(eta_mu2)));
    const DesignSet dm =
        build_design(gauss_spec(), Dataset({"y1", "y2", "x1", "x2"},
                                           {y1s, y2s, x1s, x2s}));
    const ResidualSet rm = residuals(dm, beta, 5);
    CHECK(rm.q2.cwiseAbs().maxCoeff() < 1e-12);
  }

  // independence: conditioning vanishes
  Vector bind = beta;
  bind[6] = bind[7] = 0.0;
  const ResidualSet ri = residuals(ds, bind, 77);
  CHECK((ri.q2_cond - ri.q2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("residuals under the true model are standard normal and chi-square") {
  Vector theta(2);
  theta << -0.7, 0.9;
  Vector bl(7);
  bl << 0.0, 0.0, 0.8, 0.3, 0.5, -0.4, 0.55;
  const Dataset data = simulate(2500, 0.4, 101, theta, bl);
  const DesignSet ds = build_design(gauss_spec(), data);
  Vector truth(8);
  truth << collapse_cutpoints(theta)[0], collapse_cutpoints(theta)[1], 0.8, 0.3,
      0.5, -0.4, 0.55, 0.4;

  const ResidualSet rs = residuals(ds, truth, 13);
  CHECK(ks_normal_pvalue(rs.q2) > 0.01);
  CHECK(ks_normal_pvalue(rs.q1) > 0.01);
  CHECK(ks_normal_pvalue(rs.q2_cond) > 0.01);
  CHECK(rs.chisq.mean() == doctest::Approx(2.0).epsilon(0.1));

  // components of the multivariate residual are uncorrelated
  const double c =
      (rs.q1.array() - rs.q1.mean()).matrix().dot(
          (rs.q2_cond.array() - rs.q2_cond.mean()).matrix()) /
      (rs.q1.size() * rs.q1.array().square().mean());
  CHECK(std::fabs(c) < 0.08);

  // misspecified dependence shifts the conditional residuals
  Vector wrong = truth;
  wrong[6] = std::atanh(-0.9);
  wrong[7] = 0.0;
  const ResidualSet rw = residuals(ds, wrong, 13);
  CHECK(ks_normal_pvalue(rw.q2_cond) < 0.01);
}

TEST_CASE("qq reference bands bracket well-specified samples") {
  const int n = 400;
  const Matrix band = qq_reference_band(n, RefDist::ChiSq2, 100, 0.95, 3);
  REQUIRE(band.rows() == n);
  REQUIRE(band.cols() == 3);
  for (int i = 0; i < n; ++i) {
    CHECK(band(i, 0) == doctest::Approx(-2.0 * std::log1p(-(i + 0.5) / n)));
    CHECK(band(i, 1) <= band(i, 2));
    if (i) CHECK(band(i, 0) >= band(i - 1, 0));
  }

  // a genuine chi-square(2) sample stays inside the pointwise band nearly always
  Rng rng(55);
  Vector sample(n);
  for (int i = 0; i < n; ++i) sample[i] = -2.0 * std::log1p(-rng.uniform());
  std::sort(sample.data(), sample.data() + n);
  int inside = 0;
  for (int i = 0; i < n; ++i)
    inside += (sample[i] >= band(i, 1) && sample[i] <= band(i, 2));
  CHECK(inside >= static_cast<int>(0.85 * n));

  const Matrix nb = qq_reference_band(50, RefDist::Normal, 100, 0.95, 9);
  CHECK(nb(25, 0) == doctest::Approx(norm_quantile(25.5 / 50)));
}

TEST_CASE("kolmogorov-smirnov: distribution anchor and decision behavior") {
  // asymptotic tail probability at lambda = 1 from the alternating series
  long double q = 0.0L;
  for (int k = 1; k <= 50; ++k)
    q += 2.0L * ((k % 2) ? 1.0L : -1.0L) * std::exp(-2.0L * k * k);
  const int n = 100000;
  const double rn = std::sqrt(static_cast<double>(n));
  const double stat = 1.0 / (rn + 0.12 + 0.11 / rn);
  CHECK(ks_pvalue(stat, n) == doctest::Approx(static_cast<double>(q)).epsilon(1e-10));

  // exact plotting positions give p near 1; a shifted sample is rejected
  Vector s(200);
  for (int i = 0; i < 200; ++i) s[i] = norm_quantile((i + 0.5) / 200.0);
  CHECK(ks_normal_pvalue(s) > 0.99);
  CHECK(ks_normal_pvalue(Vector(s.array() + 0.5)) < 1e-6);
}
