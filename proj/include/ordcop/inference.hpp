#pragma once

// Post-fit quantities. Everything here is read-only over the fitted model;
// randomized operations take explicit seeds and are bit-reproducible.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ordcop/dataset.hpp"
#include "ordcop/design.hpp"
#include "ordcop/estimator.hpp"
#include "ordcop/types.hpp"

namespace ordcop {

// 53-bit uniforms in (0,1) from mt19937_64; normals by inverse CDF so streams
// are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();
  double normal();

 private:
  std::mt19937_64 eng_;
};

// Empirical order-statistic quantile (inverse empirical CDF). Commutes exactly
// with monotone increasing transforms of the values.
double order_quantile(const Vector& values, double p);

struct PosteriorDraws {
  Matrix draws;  // n_sim x p, rows beta + L z with L the symmetric PSD root
  std::uint64_t seed = 0;
};

// Draws from N(beta, V_bayes). Negative covariance eigenvalues are clamped to
// zero with a warning; a zero covariance degenerates to repeated beta.
PosteriorDraws posterior_draws(const FitResult& fit, int n_sim, std::uint64_t seed,
                               std::vector<std::string>* warnings = nullptr);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval ci_from_draws(const Vector& realizations, double level);

// Posterior-simulation interval for a scalar function of the coefficients.
// n_sim >= 2 required, level in (0,1).
Interval ci_functional(const FitResult& fit,
                       const std::function<double(const Vector&)>& functional,
                       int n_sim = 100, double level = 0.95,
                       std::uint64_t seed = 1,
                       std::vector<std::string>* warnings = nullptr);

struct PredictionTable {
  Matrix eta;        // n x 4, predictor scale (mu1, mu2, sigma2, gamma)
  Matrix cat_probs;  // n x n_cat, rows sum to 1
  Vector mu2;        // decoded margin location
  Vector sigma2;     // decoded margin scale
  Vector gamma;      // copula parameter
  Vector tau;        // per-row Kendall's tau
};

PredictionTable predict(const DesignSet& ds, const Vector& beta,
                        const Dataset& newdata);

// P(Y1 <= r, Y2 <= y2) = C(F1(theta_r - eta_mu1), F2(y2)) per newdata row;
// r in 1..n_cat, r = n_cat gives F1 = 1.
Vector joint_probability(const DesignSet& ds, const Vector& beta,
                         const Dataset& newdata, int r, double y2);

// Functional builders for ci_functional at one newdata row.
std::function<double(const Vector&)> tau_functional(const DesignSet& ds,
                                                    const Dataset& newdata,
                                                    Index row);
std::function<double(const Vector&)> joint_prob_functional(const DesignSet& ds,
                                                           const Dataset& newdata,
                                                           Index row, int r,
                                                           double y2);

// 60% of the median of distinct response values by default.
double relative_poverty_line(const Vector& y2, double frac = 0.6);

struct VulnerabilityReport {
  Vector prob;               // per-row joint probability of double poverty
  std::vector<int> flagged;  // prob >= prob_threshold
  int n_flagged = 0;
  int n_poor = 0;  // realized: y1 <= educ_threshold and y2 <= income_threshold
  int n_hit = 0;   // flagged and poor
  double specificity = 0.0;  // n_hit / n_poor; NaN when vacuous
};

VulnerabilityReport classify_vulnerable(const DesignSet& ds, const Vector& beta,
                                        const Dataset& data, int educ_threshold,
                                        double income_threshold,
                                        double prob_threshold,
                                        std::vector<std::string>* warnings = nullptr);

struct ResidualSet {
  Vector q2;       // Phi^-1(F2(y2)), margin check
  Vector q1;       // randomized ordinal residuals
  Vector q2_cond;  // Phi^-1(F_{2|1}(y2 | y1)), joint check
  Vector chisq;    // q1^2 + q2_cond^2
  std::uint64_t seed = 0;
};

// Residuals on the training data embedded in the design. q1 draws one uniform
// per row on [F1(r-1), F1(r)]; the conditional CDF uses the category ratio
// [C(F1(r), v) - C(F1(r-1), v)] / [F1(r) - F1(r-1)].
ResidualSet residuals(const DesignSet& ds, const Vector& beta, std::uint64_t seed);

enum class RefDist { Normal, ChiSq2 };

// Simulation envelope for a QQ plot of n sorted values: column 0 theoretical
// quantiles at (i - 0.5)/n, columns 1-2 the lower/upper level-band across
// n_rep sorted replicate samples.
Matrix qq_reference_band(int n, RefDist dist, int n_rep = 100, double level = 0.95,
                         std::uint64_t seed = 1);

// Two-sided one-sample Kolmogorov-Smirnov test with the asymptotic p-value
// (small-sample corrected argument).
double ks_statistic(Vector sample, const std::function<double(double)>& cdf);
double ks_pvalue(double stat, int n);
double ks_normal_pvalue(const Vector& sample);

}  // namespace ordcop
