#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "hypolab/generator_lab.hpp"

using namespace hypolab;
using namespace hypolab::generator_lab;
using potentials::catalog;
using potentials::parse_box;

namespace {

PhaseGrid pgrid(const std::string& q, int modes) {
  PhaseGrid g;
  g.q = parse_axis(q);
  g.n_modes = modes;
  return g;
}

// Second-smallest eigenvalue of the dense symmetric form.
double dense_poincare(const OverdampedOperator& op) {
  const Mat S = Mat(op.symmetric_form());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  return es.eigenvalues()[1];
}

}  // namespace

TEST(Overdamped, ConstantsInKernel) {
  const auto op = discretize_overdamped(catalog("singular-1d"), parse_box("0.08:4.5:284"));
  EXPECT_LE(op.apply(Vec::Ones(op.size())).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(op.weights().sum(), 1.0, 1e-14);
}

// Stencil error for f = q on |q| < 4; halving h must divide it by about 4.
TEST(Overdamped, LinearFunctionHarmonicSecondOrder) {
  auto err = [](int n) {
    const auto op = discretize_overdamped(catalog("harmonic"), parse_box("-6:6:" + std::to_string(n)));
    const Vec q = op.sample([](const Vec& x) { return x[0]; });
    const Vec Lq = op.apply(q);
    double e = 0.0;
    for (int i = 0; i < op.size(); ++i)
      if (std::abs(q[i]) < 4.0) e = std::max(e, std::abs(Lq[i] + q[i]));
    return e;
  };
  const double e1 = err(385), e2 = err(769);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
  EXPECT_LE(e2, 2e-3);
}

TEST(Overdamped, PoincareHarmonic) {
  const auto op = discretize_overdamped(catalog("harmonic"), parse_box("-6:6:769"));
  const auto rep = poincare_constant(op, false);
  EXPECT_NEAR(rep.rho, 1.0, 0.02);
  EXPECT_NEAR(rep.rho, dense_poincare(op), 1e-8);
}

TEST(Overdamped, PoincareQuarticRefinementAndShift) {
  const auto op = discretize_overdamped(catalog("quartic-well"), parse_box("-3:3:193"));
  const auto rep = poincare_constant(op, true);
  EXPECT_NEAR(rep.rho_half / rep.rho, 1.0, 0.02);
  EXPECT_NEAR(rep.rho, dense_poincare(op), 1e-8);
}

TEST(Overdamped, ResolventOnLinear) {
  const auto op = discretize_overdamped(catalog("harmonic"), parse_box("-6:6:769"));
  const Vec one = Vec::Ones(op.size());
  EXPECT_LE((op.resolvent(one) - one).cwiseAbs().maxCoeff(), 1e-10);
  const Vec q = op.sample([](const Vec& x) { return x[0]; });
  const Vec psi = op.resolvent(q);
  double err = 0.0;
  for (int i = 0; i < op.size(); ++i)
    if (std::abs(q[i]) < 3.0) err = std::max(err, std::abs(psi[i] - 0.5 * q[i]));
  EXPECT_LE(err, 1e-3);
}

TEST(Kinetic, ProjectorMoments) {
  const KineticOperator op(catalog("harmonic"), pgrid("-6:6:97", 12), 1.0);
  const Vec f = op.project([](double q, double) { return std::cos(q); });
  const Vec pf = op.q_part(op.pi(f));
  const Vec fq = op.q_part(f);
  EXPECT_LE((pf - fq).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(op.q_part(op.pi(op.project([](double, double p) { return p; }))).cwiseAbs().maxCoeff(), 1e-12);
  const Vec p2 = op.q_part(op.pi(op.project([](double, double p) { return p * p; })));
  EXPECT_LE((p2.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Kinetic, GeneratorOnHamiltonianSecondOrder) {
  const double gamma = 0.7;
  auto err = [&](int n) {
    const KineticOperator op(catalog("harmonic"), pgrid("-6:6:" + std::to_string(n), 8), gamma);
    const Vec H = op.project([](double q, double p) { return 0.5 * q * q + 0.5 * p * p; });
    const Vec expect = op.project([&](double, double p) { return gamma * (1.0 - p * p); });
    const Vec LH = op.L() * H;
    double e = 0.0;
    for (int i = 0; i < op.nq(); ++i)
      for (double p : {-1.0, 0.0, 1.5})
        if (std::abs(op.position(0, i)) < 4.0)
          e = std::max(e, std::abs(op.evaluate(LH, i, p) - op.evaluate(expect, i, p)));
    return e;
  };
  const double e1 = err(385), e2 = err(769);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
  EXPECT_LE(e2, 5e-3);
}

TEST(Kinetic, OperatorAOnMomentum) {
  const KineticOperator op(catalog("harmonic"), pgrid("-6:6:769", 8), 1.0);
  const Vec Ap = op.q_part(op.apply_A(op.project([](double, double p) { return p; })));
  double err = 0.0;
  for (int i = 0; i < op.nq(); ++i) {
    const double q = op.position(0, i);
    if (std::abs(q) < 3.0) err = std::max(err, std::abs(Ap[i] + 0.5 * q));
  }
  EXPECT_LE(err, 1e-3);
  const Vec Af = op.apply_A(op.project([](double q, double) { return std::sin(q); }));
  EXPECT_LE(Af.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kinetic, ReversalIdentity) {
  for (const char* name : {"harmonic", "singular-1d"}) {
    const char* q = std::string(name) == "harmonic" ? "-6:6:97" : "0.08:4.5:141";
    const KineticOperator op(catalog(name), pgrid(q, 10), 1.3);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
      const Vec phi = random_phase_function(op, rng, 5, 5, false);
      const Vec a = op.L_star() * phi;
      const Vec b = op.reverse(op.L() * op.reverse(phi));
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff())) << name;
    }
  }
}

TEST(Kinetic, NormIdentities) {
  const KineticOperator op(catalog("harmonic"), pgrid("-6:6:97", 10), 1.0);
  std::mt19937_64 rng(8);
  const Vec phi = random_phase_function(op, rng);
  EXPECT_NEAR(op.modified_norm2(phi, 0.0), op.norm2(phi), 1e-14);
  EXPECT_NEAR(op.weighted_norm2(phi, [](double, double) { return 1.0; }), op.norm2(phi), 1e-12 * op.norm2(phi));
  EXPECT_GE(op.weighted_norm2(phi, [](double q, double p) { return 1.0 + q * q + p * p; }), op.norm2(phi));
  const Vec f = op.project([](double q, double) { return q; });
  EXPECT_NEAR(op.modified_norm2(f, 0.3), op.norm2(f), 1e-14);
}

TEST(Spectral, HarmonicGaps) {
  for (double gamma : {1.0, 4.0}) {
    const KineticOperator op(catalog("harmonic"), pgrid("-6:6:385", 32), gamma);
    const double exact = gamma <= 2.0 ? gamma / 2.0 : (gamma - std::sqrt(gamma * gamma - 4.0)) / 2.0;
    EXPECT_NEAR(spectral_gap(op).gap / exact, 1.0, 0.05) << gamma;
  }
}

TEST(Semigroup, PropagatorMatchesDenseExponential) {
  const KineticOperator op(catalog("harmonic"), pgrid("-6:6:25", 6), 1.0);
  const Mat L = Mat(op.L());
  std::mt19937_64 rng(2);
  const Vec phi = random_phase_function(op, rng);
  const Vec ref = (L * 0.8).exp() * phi;
  const Vec ev = expmv(op.L(), phi, 0.8);
  EXPECT_LE((ev - ref).norm(), 1e-7 * ref.norm());
  Propagator prop(op.L());
  EXPECT_LE((prop.advance(phi, 0.8).col(0) - ref).norm(), 1e-10 * ref.norm());
}

TEST(Semigroup, HarmonicDecayRate) {
  const KineticOperator op(catalog("harmonic"), pgrid("-6:6:97", 16), 1.0);
  const Vec q = op.project([](double q, double) { return q; });
  std::vector<double> t;
  for (int k = 0; k <= 60; ++k) t.push_back(0.5 * k);
  const auto c = semigroup_decay(op, {q}, t, NormSelector{});
  EXPECT_NEAR(c[0].fitted_rate, 0.5, 0.025);
  EXPECT_LE(c[0].norm.back(), c[0].norm.front());
}

TEST(Checks, EllipticLinearHasZeroHessian) {
  const auto op = discretize_overdamped(catalog("harmonic"), parse_box("-6:6:385"));
  const Vec q = op.sample([](const Vec& x) { return x[0]; });
  EXPECT_LE(op.hessian_norm2(op.resolvent(q)) / op.norm2(q), 1e-6);
}
