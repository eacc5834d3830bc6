#include <algorithm>
#include <cmath>

#include "hypolab/generator_lab.hpp"

namespace hypolab::generator_lab {

EllipticReport check_elliptic_regularity(const OverdampedOperator& op, const std::vector<Vec>& phis,
                                         double xi_eps, double tolerance) {
  EllipticReport r;
  r.bound = xi_eps;
  for (const Vec& phi : phis) {
    const double n2 = op.norm2(phi);
    if (!(n2 > 0.0)) continue;
    const Vec psi = op.resolvent(phi);
    r.ratios.push_back(op.hessian_norm2(psi) / n2);
    r.max_ratio = std::max(r.max_ratio, r.ratios.back());
  }
  r.pass = r.max_ratio <= xi_eps * (1.0 + tolerance);
  return r;
}

OpsReport verify_operator_suite(const KineticOperator& op, double rho, double eta_eps, int n_phi, unsigned seed,
                                double tolerance) {
  // the contraction bound on A is exact on the grid, so only round-off is allowed there
  constexpr double kRoundoff = 1e-12;
  OpsReport rep;
  rep.rho = rho;
  rep.eta_eps = eta_eps;
  rep.stats = {{"A-bound", 0.0, 0, kRoundoff},
               {"Lstar-A", 0.0, 0, tolerance},
               {"A-LOU", 0.0, 0, tolerance},
               {"A-LH-perp", 0.0, 0, tolerance},
               {"coercivity", 0.0, 0, tolerance}};
  auto record = [&](int i, double lhs, double rhs) {
    auto& s = rep.stats[i];
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    s.max_ratio = std::max(s.max_ratio, ratio);
    if (lhs > rhs * (1.0 + s.tolerance)) ++s.violations;
  };

  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_phi; ++i) {
    const Vec phi = random_phase_function(op, rng, 3, 4, true);
    const Vec pphi = op.pi(phi);
    const Vec qphi = phi - pphi;
    const double nP = std::sqrt(op.norm2(pphi)), nQ = std::sqrt(op.norm2(qphi));
    const Vec Aphi = op.apply_A(phi);
    const double nA = std::sqrt(op.norm2(Aphi));

    record(0, nA, 0.5 * nQ);
    record(1, std::abs(op.inner(op.L_star() * Aphi, phi)), nQ * nQ);
    const Vec ALOU = op.apply_A(op.L_OU() * phi);
    record(2, std::abs(op.inner(ALOU, phi)), 0.5 * nQ * nP);
    if (nA > 0.0)
      rep.AL_OU_identity_error = std::max(rep.AL_OU_identity_error, std::sqrt(op.norm2(ALOU + Aphi)) / nA);
    record(3, std::abs(op.inner(op.apply_A(op.L_H() * qphi), phi)), eta_eps * nQ * nP);
    record(4, rho / (1.0 + rho) * nP * nP, -op.inner(op.apply_A(op.L_H() * pphi), phi));
  }

  const Vec p = op.project([](double, double pp) { return pp; });
  const double half = 0.5 * std::sqrt(op.norm2(p - op.pi(p)));
  rep.equality_ratio_p = std::sqrt(op.norm2(op.apply_A(p))) / half;

  rep.pass = rep.AL_OU_identity_error <= 1e-8;
  for (const auto& s : rep.stats) rep.pass = rep.pass && s.violations == 0;
  return rep;
}

}  // namespace hypolab::generator_lab
