#pragma once

// Simulation study over four scenarios crossing the continuous margin
// (LogNormal, Gamma) with the copula (Gaussian, Joe). Data generation follows
// the conditional inverse method; replicate fits report coefficient recovery,
// smooth-curve errors, and the AIC comparison against the independence model.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ordcop/dataset.hpp"
#include "ordcop/estimator.hpp"
#include "ordcop/model_spec.hpp"
#include "ordcop/types.hpp"

namespace ordcop {

struct Scenario {
  int id = 1;  // 1 (LogNormal, Gaussian), 2 (Gamma, Gaussian),
               // 3 (LogNormal, Joe), 4 (Gamma, Joe)
  ContinuousFamily margin = ContinuousFamily::LogNormal;
  CopulaFamily family = CopulaFamily::Gaussian;
  int n = 1000;
  int n_rep = 100;
  std::uint64_t seed = 1;
};

Scenario make_scenario(int id, int n, int n_rep, std::uint64_t seed);

// Generating truth. The dependence intercept is set on the link scale so the
// baseline Kendall's tau equals tau0; the three smooth functions enter with
// unit scale.
struct TrueParams {
  double mu1_x1 = 1.0;
  double mu2_int = 0.5;
  double mu2_x1 = 1.0;
  double mu2_x2 = -1.0;
  double sig2_int = -0.5;
  double sig2_x3 = 0.3;
  double tau0 = 0.3;
  Vector theta;              // cut points, default (-1, 1)
  bool gamma_smooth = true;  // include s3(nu2) in the dependence predictor

  TrueParams() : theta(2) { theta << -1.0, 1.0; }
};

double smooth_s1(double nu);  // nu sin(3 nu)
double smooth_s2(double nu);  // sin(2 nu) + 0.5 nu
double smooth_s3(double nu);  // 3 nu cos(nu)

// Covariates x1, x2, x3, nu1, nu2 uniform on [-2, 2]; ordinal category from a
// latent uniform u via the cut points, continuous response from the copula
// conditional v = h^{-1}(w | u). with_latent appends the (u, v) pair as extra
// columns for diagnostics.
Dataset generate(const Scenario& sc, const TrueParams& tp, std::uint64_t seed,
                 bool with_latent = false);

// The fitting specification matching the generating process: P-splines of
// dimension 10 with second-order penalties on nu1/nu2 terms.
ModelSpec study_spec(const Scenario& sc);

struct ReplicateResult {
  int attempt = 0;  // generation seed offset used for this clean replicate
  Vector linear;    // (mu1 x1, mu2 x1, mu2 x2, sigma2 intercept, sigma2 x3)
  double aic_biv = 0.0;
  double aic_ind = 0.0;
  double loglik_biv = 0.0;
  double edf_biv = 0.0;
};

// The four smooth terms tracked on the evaluation grid.
inline constexpr int n_study_smooths = 4;

struct StudyReport {
  Scenario scenario;
  Vector linear_truth;
  std::vector<ReplicateResult> reps;
  int n_attempts = 0;
  int n_warned = 0;
  double aic_share = 0.0;  // share of replicates preferring the bivariate model

  Vector grid;
  // grid-centered estimates (row = replicate) and truths per smooth term
  std::array<Matrix, n_study_smooths> smooth_est;
  std::array<Vector, n_study_smooths> smooth_truth;
  std::array<std::string, n_study_smooths> smooth_label;
  Matrix rmse;  // n_rep x n_study_smooths
};

// Replicates are drawn with seed = scenario.seed + attempt; replicates whose
// fits raise warnings are discarded and redrawn until n_rep clean ones are
// collected. Throws StudyAborted when the warning rate exceeds 90% after at
// least 10 attempts.
StudyReport run_study(const Scenario& sc, const TrueParams& tp = TrueParams(),
                      const FitOptions& opts = FitOptions(), int grid_size = 200);

}  // namespace ordcop
