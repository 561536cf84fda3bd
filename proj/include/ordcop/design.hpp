#pragma once

// Turns a ModelSpec + Dataset into the numeric objects the likelihood works
// with: per-parameter design matrices, penalty blocks with their smoothing
// parameter indices, and the coefficient partition
//   beta = (theta*_1..theta*_R, beta_mu1, beta_mu2, beta_sigma2, beta_gamma).
//
// Smooth terms (spline, mrf) are reparameterized at build time so the
// sum-to-zero identifiability constraint is absorbed: the optimizer sees an
// unconstrained coordinate system whose design columns have mean zero.

#include <string>
#include <vector>

#include "ordcop/dataset.hpp"
#include "ordcop/model_spec.hpp"
#include "ordcop/types.hpp"

namespace ordcop {

struct TermBlock {
  TermSpec spec;
  Matrix X;             // n x width constrained design
  Matrix S;             // width x width penalty; empty when unpenalized
  int lambda_index = -1;
  Index offset = 0;     // within the parameter block
  Index width() const { return X.cols(); }

  // state needed to rebuild rows for new data
  Vector knots;                     // spline
  double lo = 0.0, hi = 0.0;        // spline data range
  Matrix Z;                         // constraint transform, raw_dim x width
  std::vector<std::string> levels;  // factor / mrf / random
};

struct ParamBlock {
  std::vector<TermBlock> terms;
  Matrix X;          // n x size, blocks concatenated in term order
  Index offset = 0;  // global offset into beta
  Index size = 0;
};

struct DesignSet {
  IntVector y1;  // ordinal codes 1..n_cat
  Vector y2;
  int n_cat = 0;
  std::array<ParamBlock, n_model_params> param;
  Index total = 0;
  int n_lambda = 0;
  // dependence block removed: the likelihood uses the independence copula
  // h(u, v) = u regardless of family
  bool independence = false;
  std::vector<std::string> warnings;

  OrdinalLink link = OrdinalLink::Logit;
  ContinuousFamily margin = ContinuousFamily::LogNormal;
  CopulaFamily family = CopulaFamily::Gaussian;
  Rotation rotation = Rotation::R0;

  Index n_cut() const { return n_cat - 1; }
  Index n_obs() const { return y2.size(); }
  const ParamBlock& block(ParamId p) const { return param[static_cast<int>(p)]; }
  // slice of beta belonging to a parameter's regression coefficients
  Vector coef(const Vector& beta, ParamId p) const {
    const ParamBlock& b = block(p);
    return beta.segment(b.offset, b.size);
  }
};

DesignSet build_design(const ModelSpec& spec, const Dataset& data);

// Symmetric PSD total x total matrix; zero blocks for cut points and
// unpenalized terms. Throws NegativeLambda.
Matrix assemble_penalty(const DesignSet& ds, const Vector& lambda);

// Design rows for new data using the state frozen at build time. Factor and
// MRF levels unseen at build time throw UnknownLevel; unseen random-effect
// levels get zero rows (population-level prediction).
Matrix predictor_matrix(const DesignSet& ds, ParamId p, const Dataset& newdata);

// Raw building blocks, exposed for direct verification.
Vector bspline_knots(double lo, double hi, int dim);
Matrix bspline_basis(const Vector& x, const Vector& knots);  // cubic, n x dim
Matrix difference_penalty(int dim, int order);               // D'D, dim x dim

// Adjacency edge list ("a,b" per line; a bare "a" declares an isolated
// region). Returns sorted region names and the graph Laplacian with a 1e-8
// ridge on isolated regions.
void read_adjacency(const std::string& path, std::vector<std::string>& levels,
                    Matrix& laplacian);

}  // namespace ordcop
