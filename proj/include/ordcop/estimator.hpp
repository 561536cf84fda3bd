#pragma once

// Two-step penalized fitting loop: exact trust-region maximization of the
// penalized log-likelihood for fixed smoothing parameters, alternated with
// smoothing-parameter selection that minimizes
//   V(lambda) = ||M - A M||^2 + 2 tr(A),   A = sqrt(I)(I + S_lambda)^{-1}sqrt(I)
// over log lambda, where I is the (PD-floored) negative unpenalized Hessian
// and M = sqrt(I) beta + sqrt(I)^{-1} g. The additive constant that does not
// move the minimizer is dropped.

#include <functional>
#include <string>
#include <vector>

#include "ordcop/design.hpp"
#include "ordcop/likelihood.hpp"
#include "ordcop/types.hpp"

namespace ordcop {

struct FitOptions {
  double tol = 1e-7;        // outer relative log-likelihood change
  int max_iter = 200;       // inner trust-region iterations per outer cycle
  int max_outer = 100;
  double delta0 = 1.0;      // initial trust radius
  double lambda_init = 1.0; // starting smoothing parameter per penalized term
  double pd_floor = 1e-8;   // eigenvalue floor factor for -H
  double grad_tol = 1e-6;   // inner stop: ||g_p||_inf < grad_tol * (1 + |l_p|)
};

struct TraceEntry {
  int outer = 0;
  int inner = 0;
  double lp = 0.0;
  double delta = 0.0;
  double gnorm = 0.0;
};

struct FitResult {
  Vector beta;
  Vector lambda;
  double loglik = neg_inf;    // unpenalized, at beta
  double penalized = neg_inf; // l_p at beta
  double edf = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  Matrix H;        // unpenalized Hessian at beta
  Matrix H_p;      // H - S_lambda
  Matrix V_bayes;  // (I_floored + S_lambda)^{-1}
  Matrix V_freq;   // V_bayes * I_floored * V_bayes
  bool converged = false;
  int outer_iters = 0;
  std::vector<TraceEntry> trace;
  std::vector<std::string> warnings;
};

// Exact solution of max_p { g'p + 1/2 p'B p : ||p|| <= delta } by root finding
// on the Levenberg shift of the eigendecomposition (handles the hard case).
Vector solve_trust_subproblem(const Matrix& B, const Vector& g, double delta);

// Symmetric eigendecomposition with eigenvalues floored at factor * max(eig)
// (or at factor itself when nothing is positive); returns a PD matrix.
Matrix pd_floor(const Matrix& M, double factor = 1e-8);

// Any twice-differentiable objective to maximize; infeasible points signal
// with feasible = false and are rejected by shrinking the radius.
using ObjectiveFn = std::function<LogLik(const Vector&, EvalMode)>;

struct TrustRun {
  Vector beta;
  double value = neg_inf;
  Vector grad;
  int iters = 0;
  bool gradient_converged = false;
  double delta = 0.0;
};

// Iterates trust steps from beta0: accept when the achieved-vs-predicted
// ratio rho >= 0.1, radius /4 when rho < 0.25, *2 after boundary steps with
// rho > 0.75, /2 on infeasible proposals. Throws StalledRadius when the
// radius underflows 1e-12 * (1 + ||beta||).
TrustRun maximize_trust(const ObjectiveFn& f, const Vector& beta0,
                        const FitOptions& opts, std::vector<TraceEntry>* trace,
                        int outer_index);

// Minimizes V over log lambda by BFGS with a centrally differenced gradient,
// starting from the current lambda. g and H are unpenalized, at beta.
Vector select_lambda(const DesignSet& ds, const Vector& beta, const Vector& g,
                     const Matrix& H, const Vector& lambda0,
                     const FitOptions& opts);

// The V(lambda) criterion value and tr(A), exposed for direct verification.
struct LambdaCriterion {
  double value = 0.0;
  double edf = 0.0;
};
LambdaCriterion lambda_criterion(const DesignSet& ds, const Vector& beta,
                                 const Vector& g, const Matrix& H,
                                 const Vector& lambda, const FitOptions& opts);

// Cut points from the empirical ordinal frequencies, marginal intercepts from
// moment matching, both polished by a penalized independence fit; the
// dependence intercept from the transformed sample Kendall's tau.
Vector starting_values(const DesignSet& ds, const FitOptions& opts,
                       std::vector<std::string>* warnings);

// Sample Kendall's tau_b; rows are strided down to at most max_pairs_rows
// rows first so the cost stays bounded (starting values only need a rough
// value).
// The same design with the dependence block removed; the likelihood then uses
// the independence copula. The dependence block sits last in the partition, so
// all other offsets and smoothing-parameter indices carry over unchanged.
DesignSet strip_dependence(const DesignSet& ds);

double empirical_tau(const IntVector& y1, const Vector& y2,
                     Index max_pairs_rows = 2000);

FitResult fit(const DesignSet& ds, const FitOptions& opts = FitOptions());

}  // namespace ordcop
