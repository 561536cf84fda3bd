#pragma once

// Mixed ordinal-continuous copula log-likelihood with analytic gradient and
// Hessian. Each observation contributes
//   log{ h(u_r, v) - h(u_{r-1}, v) } + log f2(y2)
// where u_r is the latent-link CDF at eta_{1r} = theta_r - eta^{mu1} and
// h = dC/dv. Derivatives run through five per-observation intermediates
// (eta_{1r}, eta_{1,r-1}, eta^{mu2}, eta^{sigma2}, eta^{gamma}) and are then
// mapped onto the coefficient partition by the design rows; the boundary
// categories use h = 0 below the first cut and h = 1 above the last.

#include "ordcop/design.hpp"
#include "ordcop/types.hpp"

namespace ordcop {

enum class EvalMode { Value, Gradient, Hessian };

struct LogLik {
  double value = neg_inf;
  bool feasible = false;
  Vector grad;  // sized only when mode >= Gradient
  Matrix hess;  // sized only when mode == Hessian
};

// Points where any category probability is nonpositive (or any intermediate
// is non-finite) return the -inf sentinel with feasible = false rather than
// throwing; the optimizer treats such proposals as rejected steps.
LogLik eval_loglik(const DesignSet& ds, const Vector& beta, EvalMode mode);

double loglik(const DesignSet& ds, const Vector& beta);

// Per-observation contributions (entries are -inf past an infeasible row).
Vector loglik_rows(const DesignSet& ds, const Vector& beta);

// Penalized versions: l_p = l - 1/2 beta'S beta, g_p = g - S beta, H_p = H - S.
LogLik eval_penalized(const DesignSet& ds, const Vector& beta,
                      const Matrix& S_lambda, EvalMode mode);
double loglik_penalized(const DesignSet& ds, const Vector& beta,
                        const Matrix& S_lambda);

// Central finite differences of loglik (and of the analytic gradient), the
// independent check the analytic derivatives are gated against.
Vector fd_gradient(const DesignSet& ds, const Vector& beta, double step = 1e-5);
Matrix fd_hessian(const DesignSet& ds, const Vector& beta, double step = 1e-5);

}  // namespace ordcop
