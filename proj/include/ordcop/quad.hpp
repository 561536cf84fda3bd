#pragma once

// One-dimensional quadrature: cached Gauss-Legendre rules of arbitrary size
// and an adaptive Gauss-Kronrod 7/15 integrator. Node tables are computed
// deterministically (Newton on the Legendre polynomial), so results are
// reproducible across runs and platforms with the same FP semantics.

#include <functional>
#include <vector>

namespace ordcop {

struct QuadRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// n-point Gauss-Legendre rule; cached per n.
const QuadRule& gauss_legendre_rule(int n);

template <typename F>
double gauss_legendre(F&& f, double a, double b, int n) {
  const QuadRule& r = gauss_legendre_rule(n);
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.w[i] * f(c + hw * r.x[i]);
  return s * hw;
}

// Adaptive Gauss-Kronrod 7/15. Stops when the local error estimate is below
// max(abs_tol, rel_tol * |I|) for each panel (tolerance split across panels).
double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12, double abs_tol = 1e-14,
                   int max_depth = 30);

}  // namespace ordcop
