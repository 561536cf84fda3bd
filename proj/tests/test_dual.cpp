#include <doctest.h>

#include <cmath>

#include "ordcop/dual.hpp"
#include "ordcop/special.hpp"

using namespace ordcop;

namespace {

// f(x,y) = x^2 y + exp(x) log(y) + sqrt(x+y), all derivatives known in closed form.
template <typename T>
T poly2(const T& x, const T& y) {
  return x * x * y + exp(x) * log(y) + sqrt(x + y);
}

// Scalar three-variable function exercising the full primitive set.
template <typename T>
T comp3(const T& a, const T& b, const T& c) {
  return norm_cdf(a * b) * pow(c, 1.7) + log1p(a * c) - expm1(b * 0.3) / (c + 2.0) +
         norm_quantile(0.3 + 0.1 * a);
}

double fd3(double (*f)(double, double, double), int i, double a, double b, double c,
           double h) {
  double p[3] = {a, b, c};
  p[i] += h;
  const double up = f(p[0], p[1], p[2]);
  p[i] -= 2.0 * h;
  const double dn = f(p[0], p[1], p[2]);
  return (up - dn) / (2.0 * h);
}

double comp3d(double a, double b, double c) { return comp3<double>(a, b, c); }

}  // namespace

TEST_CASE("Dual2: exact derivatives of a polynomial-transcendental mix") {
  const double xv = 0.7, yv = 1.9;
  auto x = Dual2<2>::var(xv, 0);
  auto y = Dual2<2>::var(yv, 1);
  auto f = poly2(x, y);

  const double ex = std::exp(xv), ly = std::log(yv), s = std::sqrt(xv + yv);
  CHECK(f.v == doctest::Approx(xv * xv * yv + ex * ly + s).epsilon(1e-15));
  CHECK(f.grad(0) == doctest::Approx(2 * xv * yv + ex * ly + 0.5 / s).epsilon(1e-14));
  CHECK(f.grad(1) == doctest::Approx(xv * xv + ex / yv + 0.5 / s).epsilon(1e-14));
  CHECK(f.hess(0, 0) ==
        doctest::Approx(2 * yv + ex * ly - 0.25 / (s * s * s)).epsilon(1e-14));
  CHECK(f.hess(0, 1) ==
        doctest::Approx(2 * xv + ex / yv - 0.25 / (s * s * s)).epsilon(1e-14));
  CHECK(f.hess(1, 1) ==
        doctest::Approx(-ex / (yv * yv) - 0.25 / (s * s * s)).epsilon(1e-14));
}

TEST_CASE("Dual2: division and chain primitives vs finite differences") {
  const double av = 0.4, bv = 1.3, cv = 0.9;
  auto a = Dual2<3>::var(av, 0);
  auto b = Dual2<3>::var(bv, 1);
  auto c = Dual2<3>::var(cv, 2);
  auto f = comp3(a, b, c);

  CHECK(f.v == doctest::Approx(comp3d(av, bv, cv)).epsilon(1e-14));
  const double h = 3e-6;
  for (int i = 0; i < 3; ++i) {
    const double fd = fd3(&comp3d, i, av, bv, cv, h);
    CHECK(f.grad(i) == doctest::Approx(fd).epsilon(5e-9));
  }
  // second derivatives against central differences of dual gradients
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double p[3] = {av, bv, cv};
      p[j] += h;
      auto up = comp3(Dual2<3>::var(p[0], 0), Dual2<3>::var(p[1], 1),
                      Dual2<3>::var(p[2], 2));
      p[j] -= 2.0 * h;
      auto dn = comp3(Dual2<3>::var(p[0], 0), Dual2<3>::var(p[1], 1),
                      Dual2<3>::var(p[2], 2));
      const double fd = (up.grad(i) - dn.grad(i)) / (2.0 * h);
      CHECK(f.hess(i, j) == doctest::Approx(fd).epsilon(5e-8));
    }
}

TEST_CASE("Dual3: exact third derivatives of a monomial basis") {
  // f = a^3 b^2 c + a b c + c^4, run over all 10 distinct third partials
  const double av = 1.2, bv = 0.8, cv = 1.5;
  auto a = Dual3::var(av, 0);
  auto b = Dual3::var(bv, 1);
  auto c = Dual3::var(cv, 2);
  auto f = a * a * a * b * b * c + a * b * c + c * c * c * c;

  CHECK(f.third(0, 0, 0) == doctest::Approx(6.0 * bv * bv * cv).epsilon(1e-14));
  CHECK(f.third(0, 0, 1) == doctest::Approx(12.0 * av * bv * cv).epsilon(1e-14));
  CHECK(f.third(0, 0, 2) == doctest::Approx(6.0 * av * bv * bv).epsilon(1e-14));
  CHECK(f.third(0, 1, 1) == doctest::Approx(6.0 * av * av * cv).epsilon(1e-14));
  CHECK(f.third(0, 1, 2) ==
        doctest::Approx(6.0 * av * av * bv + 1.0).epsilon(1e-14));
  CHECK(f.third(0, 2, 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(f.third(1, 1, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(f.third(1, 1, 2) == doctest::Approx(2.0 * av * av * av).epsilon(1e-14));
  CHECK(f.third(1, 2, 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(f.third(2, 2, 2) == doctest::Approx(24.0 * cv).epsilon(1e-13));
}

TEST_CASE("Dual3: transcendental composite vs finite differences of Dual2 hessian") {
  const double av = 0.35, bv = 0.55, cv = 1.4;
  auto f = comp3(Dual3::var(av, 0), Dual3::var(bv, 1), Dual3::var(cv, 2));

  // value/gradient/hessian must match the Dual2 computation exactly
  auto g = comp3(Dual2<3>::var(av, 0), Dual2<3>::var(bv, 1), Dual2<3>::var(cv, 2));
  CHECK(f.v == doctest::Approx(g.v).epsilon(1e-15));
  for (int i = 0; i < 3; ++i) {
    CHECK(f.g[i] == doctest::Approx(g.grad(i)).epsilon(1e-14));
    for (int j = i; j < 3; ++j)
      CHECK(f.hess(i, j) == doctest::Approx(g.hess(i, j)).epsilon(1e-14));
  }
  // third partials against central differences of the Dual2 hessian
  const double h = 2e-5;
  for (int k = 0; k < 3; ++k) {
    double p[3] = {av, bv, cv};
    p[k] += h;
    auto up = comp3(Dual2<3>::var(p[0], 0), Dual2<3>::var(p[1], 1),
                    Dual2<3>::var(p[2], 2));
    p[k] -= 2.0 * h;
    auto dn = comp3(Dual2<3>::var(p[0], 0), Dual2<3>::var(p[1], 1),
                    Dual2<3>::var(p[2], 2));
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const double fd = (up.hess(i, j) - dn.hess(i, j)) / (2.0 * h);
        CHECK(f.third(i, j, k) == doctest::Approx(fd).epsilon(2e-6));
      }
  }
}

TEST_CASE("Dual3: product rule closure under division") {
  // (f*g)/g == f to machine precision through third order
  auto a = Dual3::var(0.9, 0);
  auto b = Dual3::var(1.1, 1);
  auto c = Dual3::var(0.6, 2);
  auto f = exp(a) * log(b + 1.0) + c * c;
  auto g = sqrt(a + b) + c;
  auto r = (f * g) / g;
  CHECK(r.v == doctest::Approx(f.v).epsilon(1e-14));
  for (int i = 0; i < 3; ++i) CHECK(r.g[i] == doctest::Approx(f.g[i]).epsilon(1e-13));
  for (int i = 0; i < 6; ++i) CHECK(r.h[i] == doctest::Approx(f.h[i]).epsilon(1e-12));
  for (int i = 0; i < 10; ++i) CHECK(r.t[i] == doctest::Approx(f.t[i]).epsilon(1e-11));
}
