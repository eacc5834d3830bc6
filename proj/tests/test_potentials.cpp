#include <gtest/gtest.h>

#include <cmath>

#include "hypolab/expr.hpp"
#include "hypolab/potentials.hpp"

using namespace hypolab;
using namespace hypolab::potentials;

TEST(Catalog, HarmonicDerivatives) {
  const auto h = catalog("harmonic");
  EXPECT_DOUBLE_EQ(h->U1(2.0), 2.0);
  EXPECT_DOUBLE_EQ(h->dU1(2.0), 2.0);
  EXPECT_DOUBLE_EQ(h->d2U1(2.0), 1.0);
}

TEST(Catalog, SingularDomain) {
  const auto s = catalog("singular-1d");
  EXPECT_FALSE(s->in_domain(Vec::Constant(1, -1.0)));
  double prev = s->U1(0.5);
  for (double q = 0.25; q > 1e-6; q /= 2) {
    EXPECT_TRUE(s->in_domain(Vec::Constant(1, q)));
    EXPECT_GT(s->U1(q), prev);
    prev = s->U1(q);
  }
  EXPECT_GE(s->U1(std::pow(0.5, 1.0 / 3.0)), -1e-14);
}

TEST(Catalog, UnknownName) {
  try {
    catalog("no-such-potential");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unknown-name");
  }
}

TEST(Catalog, GradientsMatchFiniteDifferences) {
  for (const auto& name : catalog_names()) {
    const auto pot = catalog(name);
    const int d = pot->dim();
    Vec q = pot->reference_point();
    for (int i = 0; i < d; ++i) q[i] += 0.137 * (i + 1);
    ASSERT_TRUE(pot->in_domain(q)) << name;
    const Vec g = pot->grad(q);
    const Mat H = pot->hess(q);
    const double h = 1e-5;
    for (int i = 0; i < d; ++i) {
      Vec a = q, b = q;
      a[i] += h;
      b[i] -= h;
      EXPECT_NEAR((pot->U(a) - pot->U(b)) / (2 * h), g[i], 1e-5 * std::max(1.0, std::abs(g[i]))) << name;
      const Vec dg = (pot->grad(a) - pot->grad(b)) / (2 * h);
      for (int j = 0; j < d; ++j) EXPECT_NEAR(dg[j], H(j, i), 1e-5 * std::max(1.0, H.norm())) << name;
    }
  }
}

TEST(Expression, ValueAndJet) {
  const expr::Expression e("q0^2*sin(q1) + exp(-q0)", expr::q_names(2));
  Vec x(2);
  x << 0.7, 1.3;
  EXPECT_NEAR(e.value(x), 0.49 * std::sin(1.3) + std::exp(-0.7), 1e-14);
  const auto j = e.jet(x);
  EXPECT_NEAR(j.g[0], 1.4 * std::sin(1.3) - std::exp(-0.7), 1e-13);
  EXPECT_NEAR(j.g[1], 0.49 * std::cos(1.3), 1e-13);
  EXPECT_NEAR(j.H(0, 1), 1.4 * std::cos(1.3), 1e-13);
  EXPECT_NEAR(j.H(1, 1), -0.49 * std::sin(1.3), 1e-13);
}

TEST(Expression, ParseError) { EXPECT_THROW(expr::Expression("q0 + * 2", expr::q_names(1)), Error); }

TEST(Expression, PhaseAliases) {
  const expr::Expression e("q*p", expr::qp_names(1));
  EXPECT_DOUBLE_EQ(e.value(Vec::Constant(2, 3.0)), 9.0);
}

TEST(Growth, HarmonicConstants) {
  const auto c = estimate_growth_constants(*catalog("harmonic"), parse_box("-6:6:481"), {1.0 / 32.0, 0.5});
  EXPECT_NEAR(c.C_eps, 1.0, 1e-2);
  EXPECT_LE(c.C2, 1.0 + 1e-2);
  EXPECT_EQ(certificate_violations(*catalog("harmonic"), c, 1000, 3), 0);
}

TEST(Growth, SingularStableUnderRefinement) {
  const auto s = catalog("singular-1d");
  const auto c = estimate_growth_constants(*s, parse_box("0.05:4:800"), {1.0 / 32.0, 0.5});
  EXPECT_TRUE(std::isfinite(c.C2));
  EXPECT_TRUE(std::isfinite(c.C_eps));
  EXPECT_NEAR(c.ratio_C2, 1.0, 0.01);
  EXPECT_NEAR(c.ratio_C_eps, 1.0, 0.01);
  EXPECT_EQ(certificate_violations(*s, c, 2000, 1), 0);
}

// U = a log(1/q) + q^2 with a = 1/2: Hess U - eps |grad U|^2 = (a - eps a^2)/q^2 + 2
// is unbounded near 0 unless eps >= 1/a, so C_eps must blow up as the region approaches q = 0.
TEST(Growth, LogPotentialDoesNotStabilize) {
  const auto p = from_expression("half-log", 1, "-0.5*log(q) + q^2", {"q"}, 0.0, Vec::Constant(1, 0.5));
  const double c_far = estimate_growth_constants(*p, parse_box("0.01:4:800"), {1.0 / 32.0, 0.0}).C_eps;
  const double c_near = estimate_growth_constants(*p, parse_box("0.001:4:800"), {1.0 / 32.0, 0.0}).C_eps;
  EXPECT_GT(c_near / c_far, 50.0);
  QuadratureSpec qs;
  qs.box = parse_box("0:4:2");
  try {
    check_gradient_moments(*p, {2.0}, qs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "quadrature-nonconvergent");
  }
}

TEST(Moments, GaussianMoments) {
  QuadratureSpec qs;
  qs.box = parse_box("-10:10:2");
  const auto m = check_gradient_moments(*catalog("harmonic"), {2.0, 4.0}, qs);
  EXPECT_NEAR(m.grad_moments[0].value, 1.0, 1e-6);
  EXPECT_NEAR(m.grad_moments[1].value, 3.0, 1e-6);
}

TEST(Moments, SingularFourthMomentFinite) {
  QuadratureSpec qs;
  qs.box = parse_box("0:8:2");
  const auto m = check_gradient_moments(*catalog("singular-1d"), {4.0}, qs);
  EXPECT_TRUE(std::isfinite(m.grad_moments[0].value));
  EXPECT_LE(m.grad_moments[0].tail_bound, 0.01 * m.grad_moments[0].value);
}
