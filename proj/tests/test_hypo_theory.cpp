#include <gtest/gtest.h>

#include <cmath>

#include "hypolab/hypo_theory.hpp"

using namespace hypolab;
using namespace hypolab::hypo_theory;

namespace {

// Eigenvalues of a symmetric 2x2 from the quadratic formula.
std::pair<double, double> eig2(double a, double b, double c) {
  const double tr = a + c, det = a * c - b * b;
  const double disc = std::sqrt(tr * tr / 4.0 - det);
  return {tr / 2.0 + disc, tr / 2.0 - disc};
}

}  // namespace

TEST(EtaEpsilon, HandValues) {
  const auto h = eta_epsilon(0.5, 0.0, 1.0 / 32.0, 1.0);
  EXPECT_NEAR(h.eta_eps, 2.0, 1e-14);
  EXPECT_NEAR(h.xi_eps, 2.0, 1e-14);
  // (1/2, 4, 1/32, 3): prefactor 2, max(1, (3 + 1/2)/2) = 7/4, so eta = sqrt(7)
  EXPECT_NEAR(eta_epsilon(0.5, 4.0, 1.0 / 32.0, 3.0).eta_eps, std::sqrt(7.0), 1e-12);
}

TEST(EtaEpsilon, SmallEpsLimit) { EXPECT_NEAR(eta_epsilon(0.5, 0.0, 1e-12, 2.0).eta_eps, std::sqrt(2.0), 1e-9); }

TEST(EtaEpsilon, WindowError) {
  try {
    eta_epsilon(0.5, 0.0, 0.1, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "eps-out-of-window");
  }
}

TEST(DissipationMatrix, ZeroDelta) {
  const auto c = dissipation_matrix(1.0, 0.0, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(c.B(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(c.B(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(c.Lambda_minus, 0.0);
  EXPECT_DOUBLE_EQ(c.lambda, 0.0);
}

TEST(DissipationMatrix, WorkedExample) {
  const auto c = dissipation_matrix(1.0, 0.1, 1.0, 2.0);
  EXPECT_NEAR(c.B(0, 0), 1.9, 1e-15);
  EXPECT_NEAR(c.B(0, 1), -0.125, 1e-15);
  EXPECT_NEAR(c.B(1, 1), 0.05, 1e-15);
  EXPECT_NEAR(c.T, 1.95, 1e-14);
  EXPECT_NEAR(c.D, 0.079375, 1e-14);
  const auto [lp, lm] = eig2(1.9, -0.125, 0.05);
  EXPECT_NEAR(c.Lambda_plus, lp, 1e-12);
  EXPECT_NEAR(c.Lambda_minus, lm, 1e-12);
  EXPECT_NEAR(c.Lambda_minus, 0.04159, 1e-5);
  EXPECT_NEAR(c.lambda, 0.008319, 1e-6);
}

TEST(DissipationMatrix, TraceDeterminantIdentities) {
  for (double g : {1e-3, 0.3, 1.0, 7.0, 1e3})
    for (double d : {1e-4, 0.01, 0.2}) {
      const auto c = dissipation_matrix(g, d, 0.7, 3.0);
      EXPECT_NEAR(c.Lambda_plus * c.Lambda_minus, c.D, 1e-12 * std::max(1.0, std::abs(c.D)));
      EXPECT_NEAR(c.Lambda_plus + c.Lambda_minus, c.T, 1e-12 * std::max(1.0, std::abs(c.T)));
    }
}

TEST(DeltaMax, HandValue) { EXPECT_NEAR(delta_max(2.0, 1.0, 2.0), 8.0 / 11.0, 1e-15); }

TEST(DeltaMax, Limits) {
  EXPECT_NEAR(delta_max(1e-8, 1.0, 2.0) / 1e-8, 2.0 / (1.0 + 0.5 * 4.0), 1e-6);
  EXPECT_NEAR(delta_max(1e8, 1.0, 2.0) * 1e8, 32.0 * 1.0 / 2.0, 1e-4);
}

TEST(OptimizeDelta, AgreesWithGridArgmax) {
  const auto o = optimize_delta(1.0, 1.0, 2.0);
  const double dmax = delta_max(1.0, 1.0, 2.0);
  double best = -1.0;
  for (int k = 1; k < 10000; ++k) best = std::max(best, dissipation_matrix(1.0, dmax * k / 10000.0, 1.0, 2.0).Lambda_minus);
  EXPECT_GT(o.cert.lambda, 0.0);
  EXPECT_TRUE(o.unimodal);
  EXPECT_NEAR(o.cert.Lambda_minus, best, 1e-6);
  EXPECT_GE(o.cert.Lambda_minus, best - 1e-12);
}

TEST(OptimizeDelta, ScalingRegimes) {
  const double lo3 = optimize_delta(1e-3, 1.0, 2.0).cert.lambda / 1e-3;
  const double lo4 = optimize_delta(1e-4, 1.0, 2.0).cert.lambda / 1e-4;
  EXPECT_GT(lo3 / lo4, 0.9);
  EXPECT_LT(lo3 / lo4, 1.1);
  const double hi3 = optimize_delta(1e3, 1.0, 2.0).cert.lambda * 1e3;
  const double hi4 = optimize_delta(1e4, 1.0, 2.0).cert.lambda * 1e4;
  EXPECT_GT(hi3 / hi4, 0.9);
  EXPECT_LT(hi3 / hi4, 1.1);
}

TEST(RateCurve, Slopes) {
  const auto c = rate_curve(log_grid(1e-3, 1e3, 10), 1.0, 2.0);
  EXPECT_NEAR(c.slope_low, 1.0, 0.05);
  EXPECT_NEAR(c.slope_high, -1.0, 0.05);
  EXPECT_GT(c.lambda_bar, 0.0);
  for (const auto& r : c.rows) EXPECT_GE(r.lambda, c.lambda_bar * std::min(r.gamma, 1.0 / r.gamma) * (1 - 1e-12));
}

TEST(RateCurve, InsufficientPoints) {
  try {
    rate_curve({0.5, 1.0, 2.0}, 1.0, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "insufficient-points");
  }
}

TEST(WeightedRate, HandValue) {
  const auto w = weighted_rate(0.05, 0.2, 1.0, 0.5);
  EXPECT_NEAR(w.m, 0.125, 1e-15);
  EXPECT_NEAR(w.rate, 0.025, 1e-15);
  EXPECT_NEAR(weighted_rate(0.05, 0.2, 1.0, 1.0 - 1e-12).rate, 0.0, 1e-12);
}
