#include <gtest/gtest.h>

#include <cmath>

#include "hypolab/sampler.hpp"

using namespace hypolab;
using namespace hypolab::sampler;
using potentials::catalog;

TEST(Philox, Deterministic) {
  Philox a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    differs = differs || x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(Philox, Moments) {
  Philox r(1, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double g = r.normal();
    sn += g;
    sn2 += g * g;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
}

TEST(Fit, RecoversDampedOscillation) {
  std::vector<double> t, m;
  for (int k = 0; k < 200; ++k) {
    t.push_back(0.05 * k);
    m.push_back(std::exp(-0.3 * t.back()) * (1.2 * std::cos(0.8 * t.back()) + 0.4 * std::sin(0.8 * t.back())));
  }
  const auto f = fit_damped_exponential(t, m);
  EXPECT_NEAR(f.rate, 0.3, 1e-6);
  EXPECT_NEAR(f.omega, 0.8, 1e-6);
  EXPECT_NEAR(f.a, 1.2, 1e-5);
  EXPECT_GT(f.r2, 0.999999);
}

TEST(Integrator, GuardOnSingularPotential) {
  const auto pot = catalog("singular-1d");
  IntegratorConfig cfg;
  cfg.h = 5.0;
  State x{Vec::Constant(1, 0.2), Vec::Constant(1, -3.0)};
  Philox rng(3, 0);
  StepStats st;
  for (int i = 0; i < 20; ++i) step(x, *pot, 1.0, cfg, rng, st);
  EXPECT_TRUE(std::isfinite(x.q[0]) && std::isfinite(x.p[0]));
  EXPECT_TRUE(pot->in_domain(x.q));
  EXPECT_GT(st.halvings + st.rejects, 0);
}

TEST(Integrator, BaoabMomentumMarginal) {
  const auto pot = catalog("harmonic");
  IntegratorConfig cfg;
  cfg.h = 0.05;
  State x{Vec::Zero(1), Vec::Zero(1)};
  Philox rng(11, 0);
  StepStats st;
  double s2 = 0.0;
  const int burn = 1000, n = 200000;
  for (int i = 0; i < burn + n; ++i) {
    step(x, *pot, 10.0, cfg, rng, st);
    if (i >= burn) s2 += x.p[0] * x.p[0];
  }
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(MuAverage, GaussianMarginals) {
  const auto pot = catalog("harmonic");
  MuOptions o;
  o.box = potentials::parse_box("-10:10:2");
  EXPECT_NEAR(estimate_mu_average(*pot, [](const Vec& q, const Vec&) { return q[0] * q[0]; }, o).value, 1.0, 1e-6);
  EXPECT_NEAR(estimate_mu_average(*pot, [](const Vec&, const Vec& p) { return p[0] * p[0]; }, o).value, 1.0, 1e-6);
}

TEST(MuAverage, SingularQuadratureAgreesWithLongRun) {
  const auto pot = catalog("singular-1d");
  MuOptions o;
  o.method = "both";
  o.box = potentials::parse_box("0.01:8:2");
  o.T = 5000;
  const auto m = estimate_mu_average(*pot, [](const Vec& q, const Vec&) { return q[0]; }, o);
  EXPECT_LE(std::abs(m.quadrature - m.longrun), 3.0 * m.longrun_error + 1e-6);
  EXPECT_FALSE(m.disagreement);
}

TEST(FeynmanKac, ConstantsAndLinear) {
  const auto pot = catalog("harmonic");
  FKConfig c;
  c.h = 2e-3;
  c.n_paths = 1000;
  const auto one = feynman_kac_resolvent(*pot, [](const Vec&) { return 1.0; }, {Vec::Constant(1, 0.3)}, c);
  EXPECT_NEAR(one.psi[0], 1.0, 1e-6 + 3.0 * one.stderr_[0]);
  const auto lin = feynman_kac_resolvent(*pot, [](const Vec& q) { return q[0]; }, {Vec::Constant(1, 1.0)}, c);
  EXPECT_NEAR(lin.psi[0], 0.5, 3.0 * lin.stderr_[0]);
}

TEST(Ensemble, SignalBelowNoise) {
  const auto pot = catalog("harmonic");
  EnsembleConfig ec;
  ec.n_traj = 20;
  ec.T = 2.0;
  ec.init.tilt = 0.0;
  try {
    simulate_ensemble(*pot, ec, [](const Vec& q, const Vec&) { return q[0]; }, "q", 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "signal-below-noise");
  }
}
