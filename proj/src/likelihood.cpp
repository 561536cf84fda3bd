#include "ordcop/likelihood.hpp"

#include <cmath>
#include <vector>

#include "ordcop/copula.hpp"
#include "ordcop/dual.hpp"
#include "ordcop/margins.hpp"

namespace ordcop {

namespace {

// Rows are accumulated in fixed blocks and the block partials merged by a
// pairwise tree, so the sum is bit-identical across repeated evaluations and
// independent of how blocks might be scheduled.
constexpr Index kBlockRows = 512;

template <class T>
T tree_sum(std::vector<T>& parts) {
  std::size_t n = parts.size();
  while (n > 1) {
    std::size_t m = 0;
    for (std::size_t i = 0; i + 1 < n; i += 2) parts[m++] = parts[i] + parts[i + 1];
    if (n % 2) parts[m++] = parts[n - 1];
    n = m;
  }
  return parts[0];
}

HBundle constant_h(double h) {
  HBundle b{};
  b.h = h;
  return b;
}

// independence copula C(u, v) = uv: h = u for any dependence parameter
HBundle independence_h(double u) {
  HBundle b{};
  b.h = u;
  b.dh_du = 1.0;
  return b;
}

// Derivatives of one observation's log-likelihood with respect to the five
// intermediates z = (eta_{1r}, eta_{1,r-1}, eta^{mu2}, eta^{sigma2}, eta^{gamma}).
struct Chain {
  double ll = 0.0;
  double q[5] = {};      // d ll / dz
  double Q[5][5] = {};   // d2 ll / dz dz'
};

bool obs_chain(const DesignSet& ds, int r, double z1, double z2, double eta_mu2,
               double eta_sig2, double eta_gam, double y2, bool want_grad,
               bool want_hess, Chain& out) {
  const Index R = ds.n_cut();
  const bool has_upper = r <= R;   // top category: h == 1
  const bool has_lower = r >= 2;   // bottom category: h == 0

  const MarginBundle m = continuous_margin_eval(ds.margin, y2, eta_mu2, eta_sig2);
  const double f2 = m.f.v;
  if (!std::isfinite(f2) || f2 <= 0.0) return false;
  const double v = clamp_prob(m.F.v);

  GammaChain gc{0.0, 0.0, 0.0};
  if (!ds.independence) {
    gc = gamma_unlink_chain(ds.family, eta_gam);
    if (!std::isfinite(gc.gamma)) return false;
  }

  LinkBundle lu{}, ll_{};
  double uu = 1.0, ul = 0.0;
  if (has_upper) {
    lu = ordinal_link_eval(ds.link, z1);
    uu = clamp_prob(lu.F);
  }
  if (has_lower) {
    ll_ = ordinal_link_eval(ds.link, z2);
    ul = clamp_prob(ll_.F);
  }

  const HBundle hu =
      !has_upper ? constant_h(1.0)
                 : (ds.independence
                        ? independence_h(uu)
                        : hfun_derivatives(ds.family, ds.rotation, uu, v, gc.gamma));
  const HBundle hl =
      !has_lower ? constant_h(0.0)
                 : (ds.independence
                        ? independence_h(ul)
                        : hfun_derivatives(ds.family, ds.rotation, ul, v, gc.gamma));

  const double D = hu.h - hl.h;
  if (!std::isfinite(D) || D <= 0.0) return false;

  out.ll = std::log(D) + std::log(f2);
  if (!std::isfinite(out.ll)) return false;
  if (!want_grad) return true;

  const double f1u = has_upper ? lu.f : 0.0;
  const double df1u = has_upper ? lu.df : 0.0;
  const double f1l = has_lower ? ll_.f : 0.0;
  const double df1l = has_lower ? ll_.df : 0.0;
  const double vm = m.F.grad(0), vs = m.F.grad(1);
  const double av = hu.dh_dv - hl.dh_dv;
  const double ag = hu.dh_dgamma - hl.dh_dgamma;

  // first derivatives of D = h(u_r, v, gamma) - h(u_{r-1}, v, gamma)
  double dD[5];
  dD[0] = hu.dh_du * f1u;
  dD[1] = -hl.dh_du * f1l;
  dD[2] = av * vm;
  dD[3] = av * vs;
  dD[4] = ag * gc.d1;

  const Dual2<2> logf2 = log(m.f);
  const double invD = 1.0 / D;
  double p[5];
  for (int a = 0; a < 5; ++a) p[a] = invD * dD[a];
  for (int a = 0; a < 5; ++a) out.q[a] = p[a];
  out.q[2] += logf2.grad(0);
  out.q[3] += logf2.grad(1);

  if (!want_hess) return true;

  double d2D[5][5] = {};
  d2D[0][0] = hu.d2h_du2 * f1u * f1u + hu.dh_du * df1u;
  d2D[0][2] = hu.d2h_dudv * f1u * vm;
  d2D[0][3] = hu.d2h_dudv * f1u * vs;
  d2D[0][4] = hu.d2h_dudgamma * f1u * gc.d1;
  d2D[1][1] = -(hl.d2h_du2 * f1l * f1l + hl.dh_du * df1l);
  d2D[1][2] = -hl.d2h_dudv * f1l * vm;
  d2D[1][3] = -hl.d2h_dudv * f1l * vs;
  d2D[1][4] = -hl.d2h_dudgamma * f1l * gc.d1;
  const double avv = hu.d2h_dv2 - hl.d2h_dv2;
  const double avg = hu.d2h_dvdgamma - hl.d2h_dvdgamma;
  const double agg = hu.d2h_dgamma2 - hl.d2h_dgamma2;
  d2D[2][2] = avv * vm * vm + av * m.F.hess(0, 0);
  d2D[2][3] = avv * vm * vs + av * m.F.hess(0, 1);
  d2D[2][4] = avg * vm * gc.d1;
  d2D[3][3] = avv * vs * vs + av * m.F.hess(1, 1);
  d2D[3][4] = avg * vs * gc.d1;
  d2D[4][4] = agg * gc.d1 * gc.d1 + ag * gc.d2;

  // log D part by the quotient rule on the raw D derivatives; the log f2 part
  // only touches the (eta^{mu2}, eta^{sigma2}) square
  for (int a = 0; a < 5; ++a)
    for (int b = a; b < 5; ++b) {
      double val = invD * d2D[a][b] - p[a] * p[b];
      if (a >= 2 && a <= 3 && b <= 3) val += logf2.hess(a - 2, b - 2);
      out.Q[a][b] = val;
      out.Q[b][a] = val;
    }
  return true;
}

struct Partial {
  double ll = 0.0;
  Vector g;
  Matrix H;

  Partial operator+(const Partial& o) const {
    Partial r;
    r.ll = ll + o.ll;
    if (g.size()) r.g = g + o.g;
    if (H.size()) r.H = H + o.H;
    return r;
  }
};

}  // namespace

LogLik eval_loglik(const DesignSet& ds, const Vector& beta, EvalMode mode) {
  LogLik out;
  if (beta.size() != ds.total) throw InputError("coefficient vector has wrong length");
  if (!beta.allFinite()) return out;

  const Index R = ds.n_cut();
  const Index n = ds.n_obs();
  const bool want_g = mode != EvalMode::Value;
  const bool want_H = mode == EvalMode::Hessian;

  const Vector theta_star = beta.head(R);
  const Vector theta = expand_cutpoints(theta_star);
  const Matrix J = cutpoint_jacobian(theta_star);

  std::array<Vector, n_model_params> eta;
  for (int p = 0; p < n_model_params; ++p) {
    const ParamBlock& pb = ds.param[p];
    eta[p] = pb.size ? Vector(pb.X * ds.coef(beta, static_cast<ParamId>(p)))
                     : Vector(Vector::Zero(n));
  }

  const ParamBlock& b1 = ds.block(ParamId::Mu1);
  const ParamBlock& b2 = ds.block(ParamId::Mu2);
  const ParamBlock& b3 = ds.block(ParamId::Sigma2);
  const ParamBlock& b4 = ds.block(ParamId::Gamma);
  const Index o1 = b1.offset, o2 = b2.offset, o3 = b3.offset, o4 = b4.offset;

  std::vector<Partial> parts;
  Partial cur;
  auto reset = [&](Partial& p) {
    p.ll = 0.0;
    if (want_g) p.g = Vector::Zero(ds.total);
    if (want_H) p.H = Matrix::Zero(ds.total, ds.total);
  };
  reset(cur);

  Vector w1(R), w2(R);  // cut-block rows of dz1/dbeta, dz2/dbeta
  for (Index i = 0; i < n; ++i) {
    const int r = static_cast<int>(ds.y1[i]);
    const double z1 = (r <= R) ? theta[r - 1] - eta[0][i] : 0.0;
    const double z2 = (r >= 2) ? theta[r - 2] - eta[0][i] : 0.0;

    Chain c;
    if (!obs_chain(ds, r, z1, z2, eta[1][i], eta[2][i], eta[3][i], ds.y2[i],
                   want_g, want_H, c))
      return out;
    cur.ll += c.ll;

    if (want_g) {
      w1 = (r <= R) ? Vector(J.row(r - 1).transpose()) : Vector(Vector::Zero(R));
      w2 = (r >= 2) ? Vector(J.row(r - 2).transpose()) : Vector(Vector::Zero(R));

      cur.g.head(R) += c.q[0] * w1 + c.q[1] * w2;
      if (b1.size) cur.g.segment(o1, b1.size) -= (c.q[0] + c.q[1]) * b1.X.row(i).transpose();
      if (b2.size) cur.g.segment(o2, b2.size) += c.q[2] * b2.X.row(i).transpose();
      if (b3.size) cur.g.segment(o3, b3.size) += c.q[3] * b3.X.row(i).transpose();
      if (b4.size) cur.g.segment(o4, b4.size) += c.q[4] * b4.X.row(i).transpose();
    }

    if (want_H) {
      Matrix& H = cur.H;
      // cut x cut, including d2 theta_c / d theta*_k^2 = 2 for 2 <= k <= c
      H.topLeftCorner(R, R) += c.Q[0][0] * (w1 * w1.transpose()) +
                               c.Q[0][1] * (w1 * w2.transpose() + w2 * w1.transpose()) +
                               c.Q[1][1] * (w2 * w2.transpose());
      if (r <= R)
        for (Index k = 1; k < r; ++k) H(k, k) += 2.0 * c.q[0];
      if (r >= 2)
        for (Index k = 1; k < r - 1; ++k) H(k, k) += 2.0 * c.q[1];

      auto add_cross = [&H](Index ra, Index ca, const Vector& a, const Vector& b,
                            double s) {
        if (s == 0.0 || !a.size() || !b.size()) return;
        H.block(ra, ca, a.size(), b.size()) += s * (a * b.transpose());
        H.block(ca, ra, b.size(), a.size()) += s * (b * a.transpose());
      };

      const Vector x1 = b1.size ? Vector(b1.X.row(i).transpose()) : Vector();
      const Vector x2 = b2.size ? Vector(b2.X.row(i).transpose()) : Vector();
      const Vector x3 = b3.size ? Vector(b3.X.row(i).transpose()) : Vector();
      const Vector x4 = b4.size ? Vector(b4.X.row(i).transpose()) : Vector();

      // cut x others: z1 and z2 both carry -x1 into mu1, so those weights sum
      add_cross(0, o1,
                Vector((c.Q[0][0] + c.Q[0][1]) * w1 + (c.Q[0][1] + c.Q[1][1]) * w2),
                x1, -1.0);
      add_cross(0, o2, Vector(c.Q[0][2] * w1 + c.Q[1][2] * w2), x2, 1.0);
      add_cross(0, o3, Vector(c.Q[0][3] * w1 + c.Q[1][3] * w2), x3, 1.0);
      add_cross(0, o4, Vector(c.Q[0][4] * w1 + c.Q[1][4] * w2), x4, 1.0);

      if (b1.size) {
        const double s11 = c.Q[0][0] + 2.0 * c.Q[0][1] + c.Q[1][1];
        H.block(o1, o1, b1.size, b1.size) += s11 * (x1 * x1.transpose());
        add_cross(o1, o2, x1, x2, -(c.Q[0][2] + c.Q[1][2]));
        add_cross(o1, o3, x1, x3, -(c.Q[0][3] + c.Q[1][3]));
        add_cross(o1, o4, x1, x4, -(c.Q[0][4] + c.Q[1][4]));
      }
      if (b2.size) {
        H.block(o2, o2, b2.size, b2.size) += c.Q[2][2] * (x2 * x2.transpose());
        add_cross(o2, o3, x2, x3, c.Q[2][3]);
        add_cross(o2, o4, x2, x4, c.Q[2][4]);
      }
      if (b3.size) {
        H.block(o3, o3, b3.size, b3.size) += c.Q[3][3] * (x3 * x3.transpose());
        add_cross(o3, o4, x3, x4, c.Q[3][4]);
      }
      if (b4.size) H.block(o4, o4, b4.size, b4.size) += c.Q[4][4] * (x4 * x4.transpose());
    }

    if ((i + 1) % kBlockRows == 0) {
      parts.push_back(cur);
      reset(cur);
    }
  }
  parts.push_back(cur);

  const Partial total = tree_sum(parts);
  out.value = total.ll;
  out.feasible = std::isfinite(out.value);
  if (!out.feasible) {
    out.value = neg_inf;
    return out;
  }
  if (want_g) out.grad = total.g;
  if (want_H) out.hess = total.H;
  return out;
}

double loglik(const DesignSet& ds, const Vector& beta) {
  return eval_loglik(ds, beta, EvalMode::Value).value;
}

Vector loglik_rows(const DesignSet& ds, const Vector& beta) {
  const Index n = ds.n_obs();
  Vector rows = Vector::Constant(n, neg_inf);
  if (beta.size() != ds.total) throw InputError("coefficient vector has wrong length");
  if (!beta.allFinite()) return rows;

  const Index R = ds.n_cut();
  const Vector theta = expand_cutpoints(beta.head(R));
  std::array<Vector, n_model_params> eta;
  for (int p = 0; p < n_model_params; ++p) {
    const ParamBlock& pb = ds.param[p];
    eta[p] = pb.size ? Vector(pb.X * ds.coef(beta, static_cast<ParamId>(p)))
                     : Vector(Vector::Zero(n));
  }
  for (Index i = 0; i < n; ++i) {
    const int r = static_cast<int>(ds.y1[i]);
    const double z1 = (r <= R) ? theta[r - 1] - eta[0][i] : 0.0;
    const double z2 = (r >= 2) ? theta[r - 2] - eta[0][i] : 0.0;
    Chain c;
    if (!obs_chain(ds, r, z1, z2, eta[1][i], eta[2][i], eta[3][i], ds.y2[i],
                   false, false, c))
      break;
    rows[i] = c.ll;
  }
  return rows;
}

LogLik eval_penalized(const DesignSet& ds, const Vector& beta,
                      const Matrix& S_lambda, EvalMode mode) {
  LogLik out = eval_loglik(ds, beta, mode);
  if (!out.feasible) return out;
  if (S_lambda.size()) {
    const Vector Sb = S_lambda * beta;
    out.value -= 0.5 * beta.dot(Sb);
    if (mode != EvalMode::Value) out.grad -= Sb;
    if (mode == EvalMode::Hessian) out.hess -= S_lambda;
  }
  return out;
}

double loglik_penalized(const DesignSet& ds, const Vector& beta,
                        const Matrix& S_lambda) {
  return eval_penalized(ds, beta, S_lambda, EvalMode::Value).value;
}

Vector fd_gradient(const DesignSet& ds, const Vector& beta, double step) {
  Vector g(ds.total);
  Vector b = beta;
  for (Index k = 0; k < ds.total; ++k) {
    const double h = step * (1.0 + std::fabs(beta[k]));
    b[k] = beta[k] + h;
    const double fp = loglik(ds, b);
    b[k] = beta[k] - h;
    const double fm = loglik(ds, b);
    b[k] = beta[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix fd_hessian(const DesignSet& ds, const Vector& beta, double step) {
  Matrix H(ds.total, ds.total);
  Vector b = beta;
  for (Index k = 0; k < ds.total; ++k) {
    const double h = step * (1.0 + std::fabs(beta[k]));
    b[k] = beta[k] + h;
    const Vector gp = eval_loglik(ds, b, EvalMode::Gradient).grad;
    b[k] = beta[k] - h;
    const Vector gm = eval_loglik(ds, b, EvalMode::Gradient).grad;
    b[k] = beta[k];
    H.col(k) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace ordcop
