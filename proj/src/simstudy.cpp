#include "ordcop/simstudy.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ordcop/copula.hpp"
#include "ordcop/design.hpp"
#include "ordcop/inference.hpp"
#include "ordcop/margins.hpp"

namespace ordcop {

namespace {

struct SmoothDef {
  ParamId param;
  const char* covariate;
  double (*s)(double);
  const char* label;
};

constexpr std::array<SmoothDef, n_study_smooths> kSmooths = {{
    {ParamId::Mu1, "nu1", smooth_s1, "s1(nu1) in mu1"},
    {ParamId::Mu1, "nu2", smooth_s2, "s2(nu2) in mu1"},
    {ParamId::Mu2, "nu1", smooth_s3, "s3(nu1) in mu2"},
    {ParamId::Gamma, "nu2", smooth_s3, "s3(nu2) in gamma"},
}};

Vector centered(const Vector& v) { return v.array() - v.mean(); }

// eta of one parameter along a grid of the named covariate, everything else 0
Vector curve_on_grid(const DesignSet& ds, const Vector& beta, ParamId param,
                     const std::string& covariate, const Vector& grid) {
  const std::vector<std::string> names{"x1", "x2", "x3", "nu1", "nu2"};
  std::vector<std::vector<std::string>> cols(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    cols[c].resize(grid.size(), "0");
    if (names[c] == covariate)
      for (Index i = 0; i < grid.size(); ++i) cols[c][i] = format_double(grid[i]);
  }
  const Dataset nd(names, cols);
  return predictor_matrix(ds, param, nd) * ds.coef(beta, param);
}

}  // namespace

Scenario make_scenario(int id, int n, int n_rep, std::uint64_t seed) {
  if (id < 1 || id > 4) throw InputError("scenario id must be 1..4");
  Scenario sc;
  sc.id = id;
  sc.margin = (id % 2 == 1) ? ContinuousFamily::LogNormal : ContinuousFamily::Gamma;
  sc.family = (id <= 2) ? CopulaFamily::Gaussian : CopulaFamily::Joe;
  sc.n = n;
  sc.n_rep = n_rep;
  sc.seed = seed;
  return sc;
}

double smooth_s1(double nu) { return nu * std::sin(3.0 * nu); }
double smooth_s2(double nu) { return std::sin(2.0 * nu) + 0.5 * nu; }
double smooth_s3(double nu) { return 3.0 * nu * std::cos(nu); }

Dataset generate(const Scenario& sc, const TrueParams& tp, std::uint64_t seed,
                 bool with_latent) {
  if (sc.n < 1) throw InputError("scenario needs n >= 1");
  const double gamma0_link =
      gamma_link(sc.family, tau_to_gamma(sc.family, tp.tau0));

  Rng rng(seed);
  std::vector<std::string> y1c, y2c, x1c, x2c, x3c, n1c, n2c, uc, vc;
  for (int i = 0; i < sc.n; ++i) {
    const double x1 = 4.0 * rng.uniform() - 2.0;
    const double x2 = 4.0 * rng.uniform() - 2.0;
    const double x3 = 4.0 * rng.uniform() - 2.0;
    const double nu1 = 4.0 * rng.uniform() - 2.0;
    const double nu2 = 4.0 * rng.uniform() - 2.0;

    const double pred1 = tp.mu1_x1 * x1 + smooth_s1(nu1) + smooth_s2(nu2);
    const double eta_mu2 =
        tp.mu2_int + tp.mu2_x1 * x1 + tp.mu2_x2 * x2 + smooth_s3(nu1);
    const double eta_sig2 = tp.sig2_int + tp.sig2_x3 * x3;
    const double eta_gam =
        gamma0_link + (tp.gamma_smooth ? smooth_s3(nu2) : 0.0);
    const double gam = gamma_unlink(sc.family, eta_gam);

    const double u = rng.uniform();
    const double w = rng.uniform();
    // exchangeable family: dC/du(u, v) = w solved for v
    const double v = hfun_inverse_given_u(sc.family, Rotation::R0, u, w, gam);
    const double y2 = continuous_quantile(sc.margin, clamp_prob(v), eta_mu2, eta_sig2);
    int y1 = 1;
    for (Index r = 0; r < tp.theta.size(); ++r)
      if (u > ordinal_link_cdf(OrdinalLink::Logit, tp.theta[r] - pred1)) ++y1;

    y1c.push_back(std::to_string(y1));
    y2c.push_back(format_double(y2));
    x1c.push_back(format_double(x1));
    x2c.push_back(format_double(x2));
    x3c.push_back(format_double(x3));
    n1c.push_back(format_double(nu1));
    n2c.push_back(format_double(nu2));
    if (with_latent) {
      uc.push_back(format_double(u));
      vc.push_back(format_double(v));
    }
  }
  std::vector<std::string> names{"y1", "y2", "x1", "x2", "x3", "nu1", "nu2"};
  std::vector<std::vector<std::string>> cols{y1c, y2c, x1c, x2c, x3c, n1c, n2c};
  if (with_latent) {
    names.insert(names.end(), {"u", "v"});
    cols.insert(cols.end(), {uc, vc});
  }
  return Dataset(names, cols);
}

ModelSpec study_spec(const Scenario& sc) {
  std::string text =
      "[model]\n"
      "ordinal = y1\n"
      "continuous = y2\n"
      "copula = " +
      family_name(sc.family) + "\nmargin = " + continuous_name(sc.margin) +
      "\nlink = logit\n"
      "[param.mu1]\n"
      "linear x1\n"
      "spline nu1 dim=10 order=2\n"
      "spline nu2 dim=10 order=2\n"
      "[param.mu2]\n"
      "linear x1\n"
      "linear x2\n"
      "spline nu1 dim=10 order=2\n"
      "[param.sigma2]\n"
      "linear x3\n"
      "[param.gamma]\n"
      "spline nu2 dim=10 order=2\n";
  return parse_model_config(text);
}

StudyReport run_study(const Scenario& sc, const TrueParams& tp,
                      const FitOptions& opts, int grid_size) {
  if (sc.n_rep < 1) throw InputError("scenario needs n_rep >= 1");
  if (grid_size < 2) throw InputError("grid needs at least 2 points");

  StudyReport rep;
  rep.scenario = sc;
  rep.linear_truth.resize(5);
  rep.linear_truth << tp.mu1_x1, tp.mu2_x1, tp.mu2_x2, tp.sig2_int, tp.sig2_x3;
  rep.grid.setLinSpaced(grid_size, -2.0, 2.0);
  for (int j = 0; j < n_study_smooths; ++j) {
    Vector t(grid_size);
    for (int i = 0; i < grid_size; ++i) t[i] = kSmooths[j].s(rep.grid[i]);
    rep.smooth_truth[j] = centered(t);
    rep.smooth_est[j].resize(sc.n_rep, grid_size);
    rep.smooth_label[j] = kSmooths[j].label;
  }
  rep.rmse.resize(sc.n_rep, n_study_smooths);

  const ModelSpec spec = study_spec(sc);
  int clean = 0;
  int aic_wins = 0;
  for (int attempt = 0; clean < sc.n_rep; ++attempt) {
    rep.n_attempts = attempt + 1;
    if (attempt >= 10 && clean < 0.1 * attempt)
      throw StudyAborted("warning rate above 90% after " +
                         std::to_string(attempt) + " attempts");

    const Dataset data = generate(sc, tp, sc.seed + attempt);
    bool warned = false;
    FitResult biv, ind;
    try {
      const DesignSet ds = build_design(spec, data);
      biv = fit(ds, opts);
      ind = fit(strip_dependence(ds), opts);
      warned = !biv.converged || !ind.converged || !biv.warnings.empty() ||
               !ind.warnings.empty();
      if (!warned) {
        ReplicateResult r;
        r.attempt = attempt;
        r.linear.resize(5);
        const DesignSet& d = ds;
        r.linear << d.coef(biv.beta, ParamId::Mu1)[0],
            d.coef(biv.beta, ParamId::Mu2)[1], d.coef(biv.beta, ParamId::Mu2)[2],
            d.coef(biv.beta, ParamId::Sigma2)[0],
            d.coef(biv.beta, ParamId::Sigma2)[1];
        r.aic_biv = biv.aic;
        r.aic_ind = ind.aic;
        r.loglik_biv = biv.loglik;
        r.edf_biv = biv.edf;
        for (int j = 0; j < n_study_smooths; ++j) {
          const Vector c = centered(curve_on_grid(
              ds, biv.beta, kSmooths[j].param, kSmooths[j].covariate, rep.grid));
          rep.smooth_est[j].row(clean) = c.transpose();
          rep.rmse(clean, j) =
              std::sqrt((c - rep.smooth_truth[j]).squaredNorm() / grid_size);
        }
        aic_wins += biv.aic < ind.aic;
        rep.reps.push_back(std::move(r));
        ++clean;
      }
    } catch (const StudyAborted&) {
      throw;
    } catch (const Error&) {
      warned = true;
    }
    if (warned) ++rep.n_warned;
  }
  rep.aic_share = static_cast<double>(aic_wins) / sc.n_rep;
  return rep;
}

}  // namespace ordcop
