#include "ordcop/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ordcop/copula.hpp"
#include "ordcop/margins.hpp"

namespace ordcop {

namespace {

// Symmetric square root and inverse square root from one eigendecomposition
// of a PD matrix.
struct SymRoots {
  Matrix half;
  Matrix inv_half;
};

SymRoots sym_roots(const Matrix& pd) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(pd);
  const Vector d = eig.eigenvalues();
  Vector s(d.size()), si(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    s[i] = std::sqrt(d[i]);
    si[i] = 1.0 / s[i];
  }
  const Matrix& Q = eig.eigenvectors();
  return {Q * s.asDiagonal() * Q.transpose(), Q * si.asDiagonal() * Q.transpose()};
}

}  // namespace

Matrix pd_floor(const Matrix& M, double factor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()));
  Vector d = eig.eigenvalues();
  const double top = d.maxCoeff();
  const double floor = top > 0.0 ? factor * top : factor;
  for (Index i = 0; i < d.size(); ++i) d[i] = std::max(d[i], floor);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

Vector solve_trust_subproblem(const Matrix& B, const Vector& g, double delta) {
  const Index p = g.size();
  if (delta <= 0.0) throw InputError("trust radius must be positive");
  if (p == 0) return Vector();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (B + B.transpose()));
  const Vector lam = eig.eigenvalues();
  const Matrix& Q = eig.eigenvectors();
  const Vector b = Q.transpose() * g;
  const double lam_max = lam.maxCoeff();

  auto step_for = [&](double nu) {
    Vector y(p);
    for (Index i = 0; i < p; ++i) y[i] = b[i] / (nu - lam[i]);
    return y;
  };
  auto norm_for = [&](double nu) {
    double s = 0.0;
    for (Index i = 0; i < p; ++i) {
      const double t = b[i] / (nu - lam[i]);
      s += t * t;
    }
    return std::sqrt(s);
  };

  // interior maximizer: B negative definite and the Newton point inside
  if (lam_max < 0.0) {
    const Vector y = step_for(0.0);
    if (y.norm() <= delta) return Q * y;
  }

  // on the boundary the stationarity condition is (nu I - B) p = g with
  // nu > max(0, lam_max); ||p(nu)|| decreases monotonically there
  double lo = std::max(0.0, lam_max);

  // hard case: no gradient component on the top eigenspace and the limiting
  // step is still interior; complete it along a top eigenvector
  const double gap = 1e-12 * (1.0 + std::fabs(lam_max));
  double limit_sq = 0.0;
  bool top_loaded = false;
  for (Index i = 0; i < p; ++i) {
    if (lam[i] > lam_max - gap) {
      if (std::fabs(b[i]) > 1e-13 * (1.0 + g.norm())) top_loaded = true;
    } else {
      const double t = b[i] / (lam_max - lam[i]);
      limit_sq += t * t;
    }
  }
  if (lam_max > 0.0 && !top_loaded && limit_sq < delta * delta) {
    Vector y(p);
    for (Index i = 0; i < p; ++i)
      y[i] = (lam[i] > lam_max - gap) ? 0.0 : b[i] / (lam_max - lam[i]);
    Index top = 0;
    lam.maxCoeff(&top);
    y[top] = std::sqrt(std::max(0.0, delta * delta - limit_sq));
    return Q * y;
  }

  // safeguarded Newton on 1/||p(nu)|| - 1/delta
  double hi = lo + 1.0;
  while (norm_for(hi) > delta) hi = lo + 2.0 * (hi - lo);
  double nu = 0.5 * (lo + hi);
  if (norm_for(lo + gap) < delta) nu = lo + gap;  // root hugs the pole
  for (int it = 0; it < 200; ++it) {
    const double nrm = norm_for(nu);
    if (std::fabs(nrm - delta) <= 1e-12 * delta) break;
    if (nrm > delta)
      lo = nu;
    else
      hi = nu;
    // Newton update of phi(nu) = 1/nrm - 1/delta using
    // d||p||/dnu = -sum b_i^2/(nu-lam_i)^3 / ||p||
    double dn = 0.0;
    for (Index i = 0; i < p; ++i) {
      const double d = nu - lam[i];
      dn -= (b[i] * b[i]) / (d * d * d);
    }
    dn /= nrm;
    const double phi = 1.0 / nrm - 1.0 / delta;
    const double dphi = -dn / (nrm * nrm);
    double next = nu - phi / dphi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    nu = next;
  }
  return Q * step_for(nu);
}

TrustRun maximize_trust(const ObjectiveFn& f, const Vector& beta0,
                        const FitOptions& opts, std::vector<TraceEntry>* trace,
                        int outer_index) {
  TrustRun run;
  run.beta = beta0;
  run.delta = opts.delta0;

  LogLik cur = f(run.beta, EvalMode::Hessian);
  if (!cur.feasible) throw InputError("infeasible starting point for trust region");

  for (int it = 0; it < opts.max_iter; ++it) {
    run.iters = it + 1;
    const double gnorm = cur.grad.cwiseAbs().maxCoeff();
    if (trace)
      trace->push_back({outer_index, it, cur.value, run.delta, gnorm});
    if (gnorm < opts.grad_tol * (1.0 + std::fabs(cur.value))) {
      run.gradient_converged = true;
      break;
    }

    const Vector p = solve_trust_subproblem(cur.hess, cur.grad, run.delta);
    const double pred = cur.grad.dot(p) + 0.5 * p.dot(cur.hess * p);
    if (!(pred > 0.0)) {
      // the quadratic model cannot improve: numerically at a stationary point
      run.gradient_converged = true;
      break;
    }

    const Vector cand = run.beta + p;
    const double cand_val = f(cand, EvalMode::Value).value;
    const bool boundary = p.norm() >= 0.99 * run.delta;

    if (!std::isfinite(cand_val)) {
      run.delta *= 0.5;
    } else {
      const double rho = (cand_val - cur.value) / pred;
      if (rho >= 0.1) {
        run.beta = cand;
        cur = f(cand, EvalMode::Hessian);
        if (!cur.feasible) throw Error("accepted point became infeasible");
      }
      if (rho < 0.25)
        run.delta *= 0.25;
      else if (rho > 0.75 && boundary)
        run.delta *= 2.0;
    }
    if (run.delta < 1e-12 * (1.0 + run.beta.norm()))
      throw StalledRadius("trust region radius underflow");
  }

  run.value = cur.value;
  run.grad = cur.grad;
  return run;
}

LambdaCriterion lambda_criterion(const DesignSet& ds, const Vector& beta,
                                 const Vector& g, const Matrix& H,
                                 const Vector& lambda, const FitOptions& opts) {
  const Matrix info = pd_floor(-H, opts.pd_floor);
  const SymRoots roots = sym_roots(info);
  const Vector M = roots.half * beta + roots.inv_half * g;
  const Matrix S = assemble_penalty(ds, lambda);
  const Matrix B = info + S;
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovariance("penalized information is not positive definite");
  const Matrix A = roots.half * llt.solve(roots.half);
  LambdaCriterion out;
  out.edf = A.trace();
  out.value = (M - A * M).squaredNorm() + 2.0 * out.edf;
  return out;
}

Vector select_lambda(const DesignSet& ds, const Vector& beta, const Vector& g,
                     const Matrix& H, const Vector& lambda0,
                     const FitOptions& opts) {
  const int q = ds.n_lambda;
  if (q == 0) return Vector();

  // shared factorization pieces across criterion evaluations
  const Matrix info = pd_floor(-H, opts.pd_floor);
  const SymRoots roots = sym_roots(info);
  const Vector M = roots.half * beta + roots.inv_half * g;

  auto value_at = [&](const Vector& x) {
    Vector lam(q);
    for (int j = 0; j < q; ++j) lam[j] = std::exp(x[j]);
    const Matrix B = info + assemble_penalty(ds, lam);
    Eigen::LLT<Matrix> llt(B);
    if (llt.info() != Eigen::Success) return 1e100;
    const Matrix A = roots.half * llt.solve(roots.half);
    return (M - A * M).squaredNorm() + 2.0 * A.trace();
  };
  auto grad_at = [&](const Vector& x, double fx) {
    (void)fx;
    Vector gr(q);
    const double h = 1e-4;
    Vector xp = x;
    for (int j = 0; j < q; ++j) {
      xp[j] = x[j] + h;
      const double fp = value_at(xp);
      xp[j] = x[j] - h;
      const double fm = value_at(xp);
      xp[j] = x[j];
      gr[j] = (fp - fm) / (2.0 * h);
    }
    return gr;
  };
  auto clamp_x = [&](Vector x) {
    for (int j = 0; j < q; ++j) x[j] = std::clamp(x[j], -15.0, 15.0);
    return x;
  };

  Vector x = clamp_x(lambda0.array().log().matrix());
  double fx = value_at(x);
  Vector gx = grad_at(x, fx);
  Matrix Binv = Matrix::Identity(q, q);  // inverse Hessian approximation

  for (int it = 0; it < 60; ++it) {
    if (gx.cwiseAbs().maxCoeff() < 1e-6 * (1.0 + std::fabs(fx))) break;
    Vector dir = -(Binv * gx);
    if (dir.dot(gx) >= 0.0) {  // reset on loss of descent
      Binv = Matrix::Identity(q, q);
      dir = -gx;
    }
    // backtracking Armijo line search
    double t = 1.0;
    const double slope = gx.dot(dir);
    Vector xn;
    double fn = fx;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      xn = clamp_x(x + t * dir);
      fn = value_at(xn);
      if (fn <= fx + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved || (x - xn).cwiseAbs().maxCoeff() < 1e-9) break;
    const Vector gn = grad_at(xn, fn);
    const Vector s = xn - x, y = gn - gx;
    const double sy = s.dot(y);
    if (sy > 1e-12) {  // BFGS update on the inverse
      const Matrix I = Matrix::Identity(q, q);
      const Matrix V = I - (s * y.transpose()) / sy;
      Binv = V * Binv * V.transpose() + (s * s.transpose()) / sy;
    }
    x = xn;
    fx = fn;
    gx = gn;
  }

  Vector lam(q);
  for (int j = 0; j < q; ++j) lam[j] = std::exp(x[j]);
  return lam;
}

double empirical_tau(const IntVector& y1, const Vector& y2, Index max_pairs_rows) {
  const Index n = y1.size();
  const Index stride = std::max<Index>(1, n / max_pairs_rows);
  std::vector<Index> rows;
  for (Index i = 0; i < n; i += stride) rows.push_back(i);
  const Index m = static_cast<Index>(rows.size());
  double conc = 0.0, disc = 0.0, ties1 = 0.0, ties2 = 0.0;
  for (Index a = 0; a < m; ++a)
    for (Index b = a + 1; b < m; ++b) {
      const double d1 = static_cast<double>(y1[rows[a]] - y1[rows[b]]);
      const double d2 = y2[rows[a]] - y2[rows[b]];
      if (d1 == 0.0 && d2 == 0.0) {
        ties1 += 1.0;
        ties2 += 1.0;
      } else if (d1 == 0.0) {
        ties1 += 1.0;
      } else if (d2 == 0.0) {
        ties2 += 1.0;
      } else if (d1 * d2 > 0.0) {
        conc += 1.0;
      } else {
        disc += 1.0;
      }
    }
  const double n0 = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  const double denom = std::sqrt((n0 - ties1) * (n0 - ties2));
  if (denom <= 0.0) return 0.0;
  return (conc - disc) / denom;
}

DesignSet strip_dependence(const DesignSet& ds) {
  DesignSet ind = ds;
  ParamBlock& gb = ind.param[static_cast<int>(ParamId::Gamma)];
  ind.total -= gb.size;
  for (const TermBlock& t : gb.terms)
    if (t.lambda_index >= 0) --ind.n_lambda;
  gb.terms.clear();
  gb.X = Matrix(ds.n_obs(), 0);
  gb.size = 0;
  gb.offset = ind.total;
  ind.independence = true;
  return ind;
}

namespace {

Vector moment_intercepts(const DesignSet& ds) {
  // (mu2 intercept, sigma2 intercept) from moments of y2
  const Vector& y = ds.y2;
  const Index n = y.size();
  double mean = y.mean();
  Vector out(2);
  switch (ds.margin) {
    case ContinuousFamily::LogNormal: {
      const Vector ly = y.array().log();
      const double lm = ly.mean();
      const double sd = std::sqrt((ly.array() - lm).square().sum() / (n - 1));
      out << lm, std::log(std::max(sd, 1e-3));
      return out;
    }
    case ContinuousFamily::Normal: {
      const double sd = std::sqrt((y.array() - mean).square().sum() / (n - 1));
      out << mean, std::log(std::max(sd, 1e-3));
      return out;
    }
    case ContinuousFamily::Gamma: {
      const double sd = std::sqrt((y.array() - mean).square().sum() / (n - 1));
      out << std::log(std::max(mean, 1e-8)),
          std::log(std::max(sd / std::max(mean, 1e-8), 1e-3));
      return out;
    }
  }
  throw Error("moment_intercepts: unexpected margin");
}

}  // namespace

Vector starting_values(const DesignSet& ds, const FitOptions& opts,
                       std::vector<std::string>* warnings) {
  const Index R = ds.n_cut();
  Vector beta = Vector::Zero(ds.total);

  // cut points matching the marginal category frequencies
  Vector cum(R);
  const Index n = ds.n_obs();
  for (Index r = 0; r < R; ++r) {
    Index cnt = 0;
    for (Index i = 0; i < n; ++i)
      if (ds.y1[i] <= r + 1) ++cnt;
    cum[r] = std::clamp(static_cast<double>(cnt) / n, 1e-4, 1.0 - 1e-4);
  }
  Vector theta(R);
  for (Index r = 0; r < R; ++r) {
    theta[r] = ordinal_link_quantile(ds.link, cum[r]);
    if (r > 0 && theta[r] <= theta[r - 1]) theta[r] = theta[r - 1] + 1e-4;
  }
  beta.head(R) = collapse_cutpoints(theta);

  // moment-matched intercepts for the continuous margin
  const Vector mom = moment_intercepts(ds);
  beta[ds.block(ParamId::Mu2).offset] = mom[0];
  beta[ds.block(ParamId::Sigma2).offset] = mom[1];

  // polish the marginal coefficients with an independence fit
  const DesignSet ind = ds.independence ? ds : strip_dependence(ds);
  Vector beta_ind = beta.head(ind.total);
  Vector lam = Vector::Constant(ind.n_lambda, opts.lambda_init);
  FitOptions pre = opts;
  pre.max_outer = std::min(opts.max_outer, 20);
  try {
    for (int outer = 0; outer < pre.max_outer; ++outer) {
      const Matrix S = assemble_penalty(ind, lam);
      auto obj = [&](const Vector& b, EvalMode mode) {
        return eval_penalized(ind, b, S, mode);
      };
      const TrustRun run = maximize_trust(obj, beta_ind, pre, nullptr, outer);
      beta_ind = run.beta;
      if (ind.n_lambda == 0) break;
      const LogLik at = eval_loglik(ind, beta_ind, EvalMode::Hessian);
      const Vector next = select_lambda(ind, beta_ind, at.grad, at.hess, lam, pre);
      const double change = ((next - lam).cwiseAbs().array() /
                             (1.0 + lam.cwiseAbs().array()))
                                .maxCoeff();
      lam = next;
      if (change < 1e-3) break;
    }
  } catch (const StalledRadius&) {
    if (warnings) warnings->push_back("independence prefit stalled; using moment starts");
  }
  beta.head(ind.total) = beta_ind;

  // dependence intercept from the transformed sample tau
  if (ds.block(ParamId::Gamma).size > 0) {
    const double tau = std::clamp(empirical_tau(ds.y1, ds.y2), -0.9, 0.9);
    const double gamma0 = tau_to_gamma_or_default(ds.family, tau);
    beta[ds.block(ParamId::Gamma).offset] = gamma_link(ds.family, gamma0);
  }
  return beta;
}

FitResult fit(const DesignSet& ds, const FitOptions& opts) {
  FitResult res;
  res.lambda = Vector::Constant(ds.n_lambda, opts.lambda_init);
  res.beta = starting_values(ds, opts, &res.warnings);

  double prev_ll = neg_inf;
  bool stalled = false;
  bool inner_done = false;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    res.outer_iters = outer + 1;
    const Matrix S = assemble_penalty(ds, res.lambda);
    auto obj = [&](const Vector& b, EvalMode mode) {
      return eval_penalized(ds, b, S, mode);
    };
    try {
      const TrustRun run = maximize_trust(obj, res.beta, opts, &res.trace, outer);
      res.beta = run.beta;
      res.penalized = run.value;
      inner_done = run.gradient_converged;
    } catch (const StalledRadius&) {
      res.warnings.push_back("trust region stalled before inner convergence");
      stalled = true;
    }

    const LogLik at = eval_loglik(ds, res.beta,
                                  ds.n_lambda ? EvalMode::Hessian : EvalMode::Value);
    const double ll = at.value;
    const bool outer_done =
        std::fabs(ll - prev_ll) / (0.1 + std::fabs(ll)) < opts.tol;
    prev_ll = ll;
    if (ds.n_lambda == 0 || outer_done || stalled) {
      res.converged = !stalled && (ds.n_lambda ? outer_done : inner_done);
      break;
    }
    res.lambda = select_lambda(ds, res.beta, at.grad, at.hess, res.lambda, opts);
  }
  if (!res.converged && !stalled)
    res.warnings.push_back("outer loop reached max iterations without meeting the stop rule");

  // final quantities at beta-hat
  const Matrix S = assemble_penalty(ds, res.lambda);
  const LogLik at = eval_loglik(ds, res.beta, EvalMode::Hessian);
  if (!at.feasible) throw Error("fit ended at an infeasible point");
  res.loglik = at.value;
  res.penalized = res.loglik - 0.5 * res.beta.dot(S * res.beta);
  res.H = at.hess;
  res.H_p = at.hess - S;

  const Matrix info = pd_floor(-res.H, opts.pd_floor);
  const Matrix Bp = info + S;
  Eigen::LLT<Matrix> llt(Bp);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovariance("penalized information is not positive definite");
  const Matrix id = Matrix::Identity(ds.total, ds.total);
  res.V_bayes = llt.solve(id);
  res.V_bayes = 0.5 * (res.V_bayes + res.V_bayes.transpose());
  res.V_freq = res.V_bayes * info * res.V_bayes;
  res.V_freq = 0.5 * (res.V_freq + res.V_freq.transpose());
  res.edf = llt.solve(info).trace();
  res.aic = -2.0 * res.loglik + 2.0 * res.edf;
  res.bic = -2.0 * res.loglik + std::log(static_cast<double>(ds.n_obs())) * res.edf;
  return res;
}

}  // namespace ordcop
