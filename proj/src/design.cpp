#include "ordcop/design.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ordcop/margins.hpp"

namespace ordcop {

Vector bspline_knots(double lo, double hi, int dim) {
  // cubic basis of size dim needs dim+4 uniform knots with the data range
  // spanned by knots 3..dim; spacing h = (hi-lo)/(dim-3)
  if (!(hi > lo)) throw InputError("spline covariate is constant");
  const int m = dim + 4;
  const double h = (hi - lo) / (dim - 3);
  Vector t(m);
  for (int i = 0; i < m; ++i) t[i] = lo + (i - 3) * h;
  return t;
}

Matrix bspline_basis(const Vector& x, const Vector& knots) {
  const int dim = static_cast<int>(knots.size()) - 4;
  const double lo = knots[3], hi = knots[dim];
  Matrix B = Matrix::Zero(x.size(), dim);
  for (Index i = 0; i < x.size(); ++i) {
    double xv = std::min(std::max(x[i], lo), hi);
    // right-continuous interval index, last interval closed on the right
    int k = 3 + static_cast<int>((xv - lo) / (knots[4] - knots[3]));
    if (k > dim - 1) k = dim - 1;
    while (k > 3 && xv < knots[k]) --k;
    while (k < dim - 1 && xv >= knots[k + 1]) ++k;
    // Cox-de Boor triangle for the 4 cubic splines alive on [t_k, t_k+1)
    double w[4] = {1.0, 0.0, 0.0, 0.0};
    for (int d = 1; d <= 3; ++d) {
      double saved = 0.0;
      for (int j = 0; j < d; ++j) {
        const double tl = knots[k - d + 1 + j], tr = knots[k + 1 + j];
        const double term = w[j] / (tr - tl);
        w[j] = saved + (tr - xv) * term;
        saved = (xv - tl) * term;
      }
      w[d] = saved;
    }
    for (int j = 0; j <= 3; ++j) {
      const int col = k - 3 + j;
      if (col >= 0 && col < dim) B(i, col) = w[j];
    }
  }
  return B;
}

Matrix difference_penalty(int dim, int order) {
  Matrix D = Matrix::Identity(dim, dim);
  for (int o = 0; o < order; ++o) {
    const Index r = D.rows();
    D = (D.bottomRows(r - 1) - D.topRows(r - 1)).eval();
  }
  return D.transpose() * D;
}

void read_adjacency(const std::string& path, std::vector<std::string>& levels,
                    Matrix& laplacian) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open adjacency file '" + path + "'");
  std::set<std::string> names;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  int ln = 0;
  auto trim = [](std::string s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  };
  while (std::getline(in, line)) {
    ++ln;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const size_t comma = s.find(',');
    if (comma == std::string::npos) {
      names.insert(s);  // isolated region declaration
      continue;
    }
    const std::string a = trim(s.substr(0, comma)), b = trim(s.substr(comma + 1));
    if (a.empty() || b.empty())
      throw InputError(path + " line " + std::to_string(ln) + ": malformed edge");
    names.insert(a);
    names.insert(b);
    if (a != b) edges.emplace_back(a, b);
  }
  if (names.empty()) throw InputError(path + ": no regions");
  levels.assign(names.begin(), names.end());
  std::map<std::string, int> idx;
  for (size_t i = 0; i < levels.size(); ++i) idx[levels[i]] = static_cast<int>(i);
  const int L = static_cast<int>(levels.size());
  laplacian = Matrix::Zero(L, L);
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : edges) {
    int i = idx[a], j = idx[b];
    if (i > j) std::swap(i, j);
    if (!seen.insert({i, j}).second) continue;
    laplacian(i, i) += 1.0;
    laplacian(j, j) += 1.0;
    laplacian(i, j) -= 1.0;
    laplacian(j, i) -= 1.0;
  }
  for (int i = 0; i < L; ++i)
    if (laplacian(i, i) == 0.0) laplacian(i, i) = 1e-8;  // isolated-region ridge
}

namespace {

std::vector<std::string> sorted_levels(const std::vector<std::string>& col) {
  std::set<std::string> s(col.begin(), col.end());
  return {s.begin(), s.end()};
}

Matrix indicator_matrix(const std::vector<std::string>& col,
                        const std::vector<std::string>& levels,
                        const std::string& covariate, bool throw_unknown) {
  std::map<std::string, int> idx;
  for (size_t i = 0; i < levels.size(); ++i) idx[levels[i]] = static_cast<int>(i);
  Matrix X = Matrix::Zero(static_cast<Index>(col.size()),
                          static_cast<Index>(levels.size()));
  for (size_t i = 0; i < col.size(); ++i) {
    auto it = idx.find(col[i]);
    if (it == idx.end()) {
      if (throw_unknown)
        throw UnknownLevel("covariate '" + covariate + "': level '" + col[i] +
                           "' not seen at build time");
      continue;  // zero row
    }
    X(static_cast<Index>(i), it->second) = 1.0;
  }
  return X;
}

// Null-space transform of the single constraint c'beta = 0; Z is raw_dim x
// (raw_dim - 1) orthonormal with c'Z = 0.
Matrix constraint_nullspace(const Vector& c) {
  const Index k = c.size();
  Eigen::HouseholderQR<Matrix> qr(c);
  const Matrix Q = qr.householderQ();
  return Q.rightCols(k - 1);
}

// Builds one term; rows from `data`, frozen state into the block.
TermBlock build_term(const TermSpec& t, const Dataset& data, int& next_lambda) {
  TermBlock b;
  b.spec = t;
  switch (t.kind) {
    case TermSpec::Kind::Intercept:
      b.X = Matrix::Ones(data.n_rows(), 1);
      break;
    case TermSpec::Kind::Linear:
      b.X = data.numeric_column(t.covariate);
      break;
    case TermSpec::Kind::Factor: {
      const auto& col = data.string_column(t.covariate);
      b.levels = sorted_levels(col);
      if (b.levels.size() < 2)
        throw InputError("factor '" + t.covariate + "' has fewer than 2 levels");
      const Matrix full = indicator_matrix(col, b.levels, t.covariate, true);
      b.X = full.rightCols(full.cols() - 1);  // first sorted level is reference
      break;
    }
    case TermSpec::Kind::Spline: {
      const Vector x = data.numeric_column(t.covariate);
      b.lo = x.minCoeff();
      b.hi = x.maxCoeff();
      b.knots = bspline_knots(b.lo, b.hi, t.basis_dim);
      const Matrix raw = bspline_basis(x, b.knots);
      const Matrix S = difference_penalty(t.basis_dim, t.penalty_order);
      b.Z = constraint_nullspace(raw.colwise().sum().transpose());
      b.X = raw * b.Z;
      b.S = b.Z.transpose() * S * b.Z;
      b.lambda_index = next_lambda++;
      break;
    }
    case TermSpec::Kind::MRF: {
      const auto& col = data.string_column(t.covariate);
      Matrix lap;
      read_adjacency(t.adjacency_path, b.levels, lap);
      {
        std::set<std::string> known(b.levels.begin(), b.levels.end());
        for (const auto& r : col)
          if (!known.count(r))
            throw DisconnectedRegion("region '" + r +
                                     "' missing from adjacency file " +
                                     t.adjacency_path);
      }
      const Matrix raw = indicator_matrix(col, b.levels, t.covariate, true);
      b.Z = constraint_nullspace(raw.colwise().sum().transpose());
      b.X = raw * b.Z;
      b.S = b.Z.transpose() * lap * b.Z;
      b.lambda_index = next_lambda++;
      break;
    }
    case TermSpec::Kind::RandomEffect: {
      const auto& col = data.string_column(t.covariate);
      b.levels = sorted_levels(col);
      if (b.levels.size() < 2)
        throw InputError("random '" + t.covariate + "' has fewer than 2 levels");
      b.X = indicator_matrix(col, b.levels, t.covariate, true);
      b.S = Matrix::Identity(b.X.cols(), b.X.cols());
      b.lambda_index = next_lambda++;
      break;
    }
  }
  return b;
}

Matrix term_rows(const TermBlock& b, const Dataset& data) {
  switch (b.spec.kind) {
    case TermSpec::Kind::Intercept: return Matrix::Ones(data.n_rows(), 1);
    case TermSpec::Kind::Linear: return data.numeric_column(b.spec.covariate);
    case TermSpec::Kind::Factor: {
      const Matrix full = indicator_matrix(data.string_column(b.spec.covariate),
                                           b.levels, b.spec.covariate, true);
      return full.rightCols(full.cols() - 1);
    }
    case TermSpec::Kind::Spline:
      return bspline_basis(data.numeric_column(b.spec.covariate), b.knots) * b.Z;
    case TermSpec::Kind::MRF:
      return indicator_matrix(data.string_column(b.spec.covariate), b.levels,
                              b.spec.covariate, true) *
             b.Z;
    case TermSpec::Kind::RandomEffect:
      return indicator_matrix(data.string_column(b.spec.covariate), b.levels,
                              b.spec.covariate, false);
  }
  return {};
}

}  // namespace

DesignSet build_design(const ModelSpec& spec, const Dataset& data) {
  DesignSet ds;
  ds.link = spec.link;
  ds.margin = spec.margin;
  ds.family = spec.family;
  ds.rotation = spec.rotation;

  const Vector y1_raw = data.numeric_column(spec.ordinal_col);
  ds.n_cat = validate_ordinal(y1_raw);
  ds.y1 = y1_raw.cast<int>();
  ds.y2 = data.numeric_column(spec.continuous_col);
  validate_support(spec.margin, ds.y2);

  int next_lambda = 0;
  Index offset = ds.n_cut();
  for (int k = 0; k < n_model_params; ++k) {
    ParamBlock& pb = ds.param[k];
    pb.offset = offset;
    Index width = 0;
    for (const TermSpec& t : spec.terms[k]) {
      TermBlock b = build_term(t, data, next_lambda);
      b.offset = width;
      width += b.width();
      pb.terms.push_back(std::move(b));
    }
    pb.size = width;
    pb.X.resize(data.n_rows(), width);
    for (const TermBlock& b : pb.terms)
      pb.X.middleCols(b.offset, b.width()) = b.X;
    offset += width;

    // collinearity check over the unpenalized columns only
    Index up = 0;
    for (const TermBlock& b : pb.terms)
      if (!b.spec.penalized()) up += b.width();
    if (up > 1) {
      Matrix M(data.n_rows(), up);
      Index c = 0;
      for (const TermBlock& b : pb.terms)
        if (!b.spec.penalized()) {
          M.middleCols(c, b.width()) = b.X;
          c += b.width();
        }
      Eigen::ColPivHouseholderQR<Matrix> qr(M);
      qr.setThreshold(1e-10);
      if (qr.rank() < up)
        ds.warnings.push_back("parameter " + param_name(static_cast<ParamId>(k)) +
                              ": unpenalized design columns are collinear (rank " +
                              std::to_string(qr.rank()) + " of " +
                              std::to_string(up) + ")");
    }
  }
  ds.total = offset;
  ds.n_lambda = next_lambda;
  return ds;
}

Matrix assemble_penalty(const DesignSet& ds, const Vector& lambda) {
  if (lambda.size() != ds.n_lambda)
    throw InputError("penalty: expected " + std::to_string(ds.n_lambda) +
                     " smoothing parameters, got " + std::to_string(lambda.size()));
  for (Index i = 0; i < lambda.size(); ++i)
    if (!(lambda[i] >= 0.0))
      throw NegativeLambda("smoothing parameter " + std::to_string(i) +
                           " is negative or NaN");
  Matrix S = Matrix::Zero(ds.total, ds.total);
  for (const ParamBlock& pb : ds.param)
    for (const TermBlock& b : pb.terms)
      if (b.lambda_index >= 0)
        S.block(pb.offset + b.offset, pb.offset + b.offset, b.width(), b.width()) +=
            lambda[b.lambda_index] * b.S;
  return S;
}

Matrix predictor_matrix(const DesignSet& ds, ParamId p, const Dataset& newdata) {
  const ParamBlock& pb = ds.block(p);
  Matrix X(newdata.n_rows(), pb.size);
  for (const TermBlock& b : pb.terms)
    X.middleCols(b.offset, b.width()) = term_rows(b, newdata);
  return X;
}

}  // namespace ordcop
