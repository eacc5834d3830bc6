#include <gtest/gtest.h>

#include <cmath>

#include "hypolab/lyapunov.hpp"

using namespace hypolab;
using namespace hypolab::lyapunov;
using potentials::catalog;
using potentials::parse_box;

namespace {

PhasePoint pt(double q, double p) { return {Vec::Constant(1, q), Vec::Constant(1, p)}; }

// (L f)(q, p) for d = 1 by central differences.
template <class F>
double fd_generator(const F& f, const potentials::PotentialSpec& pot, double gamma, double q, double p, double h) {
  const double fq = (f(q + h, p) - f(q - h, p)) / (2 * h);
  const double fp = (f(q, p + h) - f(q, p - h)) / (2 * h);
  const double fpp = (f(q, p + h) - 2 * f(q, p) + f(q, p - h)) / (h * h);
  return p * fq - pot.dU1(q) * fp - gamma * p * fp + gamma * fpp;
}

}  // namespace

TEST(QuadCross, HandValues) {
  const auto h = catalog("harmonic");
  EXPECT_NEAR(quad_cross_drift(*h, 0.2, 1.0, pt(1.0, 1.0)), -0.2, 1e-15);
  EXPECT_NEAR(quad_cross_drift(*h, 0.7, 2.5, pt(0.0, 0.0)), 2.5, 1e-15);
  EXPECT_NEAR(quad_cross_drift(*h, 0.0, 1.5, pt(0.3, 2.0)), -1.5 * 4.0 + 1.5, 1e-14);
}

TEST(QuadCross, FiniteDifferenceOrder) {
  const auto pot = catalog("quartic-well");
  const double kappa = 0.3, gamma = 0.8, q = 0.9, p = -0.6;
  auto W = [&](double a, double b) { return pot->U1(a) + 0.5 * b * b + kappa * a * b; };
  const double exact = quad_cross_drift(*pot, kappa, gamma, pt(q, p));
  EXPECT_NEAR(fd_generator(W, *pot, gamma, q, p, 1e-4), exact, 1e-6);
}

TEST(ExpTilted, MatchesFiniteDifferenceOracle) {
  const auto pot = catalog("harmonic");
  const ExpTilted s{0.5, 0.1, 10.0};
  const double gamma = 1.0, q = 1.0, p = 1.0;
  auto W = [&](double a, double b) {
    const double g = pot->dU1(a);
    return std::exp(s.eta * (pot->U1(a) + 0.5 * b * b + s.kappa * b * g / (g * g + s.sigma)));
  };
  const double exact = drift(*pot, LyapunovSpec::exp_tilted(s.eta, s.kappa, s.sigma), gamma, pt(q, p));
  const double e1 = std::abs(fd_generator(W, *pot, gamma, q, p, 1e-2) - exact);
  const double e2 = std::abs(fd_generator(W, *pot, gamma, q, p, 5e-3) - exact);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
  EXPECT_NEAR(fd_generator(W, *pot, gamma, q, p, 1e-4), exact, 1e-6 * std::abs(exact));
  EXPECT_NEAR(exp_tilted_drift_ratio(*pot, s, gamma, pt(q, p)) * s.eta * W(q, p), exact, 1e-12 * std::abs(exact));
}

TEST(ExpTilted, ZeroMomentumFormula) {
  const auto pot = catalog("singular-1d");
  const ExpTilted s{0.5, 2.0, 3.0};
  const double gamma = 0.7;
  for (double q : {0.3, 0.9, 2.0}) {
    const double g2 = pot->dU1(q) * pot->dU1(q);
    const double r = g2 / (g2 + s.sigma);
    const double expect = gamma - s.kappa * r + s.eta * gamma * s.kappa * s.kappa * g2 / ((g2 + s.sigma) * (g2 + s.sigma));
    EXPECT_NEAR(exp_tilted_drift_ratio(*pot, s, gamma, pt(q, 0.0)), expect, 1e-12);
  }
}

TEST(ExpTilted, ZeroKappaReduces) {
  const auto pot = catalog("quartic-well");
  const ExpTilted s{0.4, 0.0, 1.0};
  for (double p : {-2.0, 0.5, 3.0})
    EXPECT_NEAR(exp_tilted_drift_ratio(*pot, s, 1.5, pt(0.4, p)), -1.5 * p * p + 1.5 + 0.4 * 1.5 * p * p, 1e-12);
}

TEST(ExpParams, Recipe) {
  potentials::GrowthCertificate c;
  c.c1 = 0.5;
  c.eps = 1.0 / 32.0;
  c.C_eps = 1.0;
  const auto e = select_exp_params(c, 1.0, 0.5, 1);
  EXPECT_NEAR(e.spec.exp.kappa, 2.0, 1e-15);
  EXPECT_NEAR(e.C_eta, 16.0, 1e-12);
  EXPECT_NEAR(e.spec.exp.sigma, 64.0, 1e-12);
  const auto e10 = select_exp_params(c, 10.0, 0.5, 1);
  EXPECT_NEAR(e10.spec.exp.kappa, 20.0, 1e-14);
  EXPECT_EQ(e10.spec.exp.sigma, e.spec.exp.sigma);
  c.eps = 0.2;
  try {
    select_exp_params(c, 1.0, 0.9, 1);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), "eps-too-large-for-eta");
  }
}

TEST(Reverse, MirrorsMomentum) {
  const auto pot = catalog("harmonic");
  const auto s = LyapunovSpec::quad_cross(0.4);
  const auto r = reverse(s);
  EXPECT_DOUBLE_EQ(evaluate(*pot, r, pt(0.7, 1.1)), evaluate(*pot, s, pt(0.7, -1.1)));
  EXPECT_DOUBLE_EQ(drift(*pot, r, 1.0, pt(0.7, 1.1)), drift(*pot, s, 1.0, pt(0.7, -1.1)));
}

TEST(KappaBar, HarmonicAndMonotone) {
  const double kb = select_kappa_bar(2.0, 0.5);
  EXPECT_GT(kb, 0.0);
  EXPECT_LT(kb, 1.0);
  for (double g : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(kappa_bar_matrix(kb, 2.0, 0.5, g));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12) << g;
  }
  double prev = 0.0;
  for (double c5 : {0.5, 1.0, 4.0, 16.0, 64.0}) {
    const double k = select_kappa_bar(2.0, c5);
    EXPECT_GE(k, prev);
    prev = k;
  }
}

TEST(VerifyDrift, QuadCrossBoundHarmonic) {
  const auto pot = catalog("harmonic");
  const double kb = select_kappa_bar(2.0, 0.5), gamma = 0.5;
  DriftOptions o;
  o.refine = false;
  const auto r = verify_drift(*pot, LyapunovSpec::quad_cross(kb * gamma), gamma, kb * gamma, parse_box("-6:6:121,-8:8:161"), o);
  EXPECT_LE(r.beta, gamma * (1.0 + 1e-12));
}

TEST(VerifyDrift, ZeroAlphaIsPositivePartOfSup) {
  const auto pot = catalog("harmonic");
  DriftOptions o;
  o.refine = false;
  const auto r = verify_drift(*pot, LyapunovSpec::quad_cross(0.0), 2.0, 0.0, parse_box("-3:3:61,-3:3:61"), o);
  EXPECT_NEAR(r.beta, 2.0, 1e-12);  // sup of gamma (1 - p^2) at p = 0
}

TEST(AlphaMax, SingularGammaStable) {
  const auto pot = catalog("singular-1d");
  potentials::GrowthCertificate c = potentials::estimate_growth_constants(*pot, parse_box("0.05:4:800"), {1.0 / 32.0, 0.0});
  const auto grid = parse_box("0.005:4:800,-8:8:81");
  double lo = 1e9, hi = 0.0;
  for (double g : {0.25, 0.5, 1.0}) {
    const double a = alpha_max(*pot, select_exp_params(c, g, 0.5, 1).spec, g, grid) / g;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LE(hi / lo, 2.0);
}
