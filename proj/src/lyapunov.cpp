#include "hypolab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hypolab::lyapunov {

namespace {

void check_domain(const PotentialSpec& pot, const Vec& q) {
  if (!pot.in_domain(q)) throw Error("out-of-domain", "phase point outside the domain of " + pot.id());
}

PhasePoint mirrored(const PhasePoint& x) { return {x.q, -x.p}; }

// Terms of the exp-tilted drift shared by the pointwise and grid paths.
double exp_ratio(const ExpTilted& s, double gamma, int d, const Vec& p, const Vec& g, const Mat& Hs) {
  const double S = g.squaredNorm() + s.sigma;
  const double pg = p.dot(g);
  const double p2 = p.squaredNorm();
  const double pHp = p.dot(Hs * p);
  const double gHp = g.dot(Hs * p);
  const double k = s.kappa;
  const double LHt = -gamma * p2 + gamma * d - k * gamma * pg / S - k * g.squaredNorm() / S + k * pHp / S -
                     2.0 * k * (pg / S) * (gHp / S);
  const double gradp2 = p2 + 2.0 * k * pg / S + k * k * g.squaredNorm() / (S * S);
  return LHt + s.eta * gamma * gradp2;
}

double exp_exponent(const ExpTilted& s, double U, const Vec& p, const Vec& g) {
  const double S = g.squaredNorm() + s.sigma;
  return s.eta * (U + 0.5 * p.squaredNorm() + s.kappa * p.dot(g) / S);
}

std::string describe(const GridBox& g) {
  std::ostringstream os;
  os.precision(17);
  for (int k = 0; k < g.dim(); ++k) {
    if (k) os << ',';
    os << g.axes[k].lo << ':' << g.axes[k].hi << ':' << g.axes[k].n;
  }
  return os.str();
}

// Per-node values of W and LW on a phase grid.
struct Scan {
  std::vector<double> W, LW, H, gnorm;
  std::vector<char> flagged;
  std::vector<char> edge;  // within two nodes of a face of the truncation box
  std::vector<long> qidx, pidx;
  GridBox qbox, pbox;
};

bool near_face(const GridBox& b, long flat) {
  for (const auto& a : b.axes) {
    const long i = flat % a.n;
    flat /= a.n;
    if (i < 2 || i > a.n - 3) return true;
  }
  return false;
}

Scan scan_grid(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma, const GridBox& grid) {
  const int d = pot.dim();
  if (grid.dim() != 2 * d) throw Error("bad-grid", "phase grid needs 2d axes (q then p)");
  Scan s;
  s.qbox.axes.assign(grid.axes.begin(), grid.axes.begin() + d);
  s.pbox.axes.assign(grid.axes.begin() + d, grid.axes.end());
  const long nq = s.qbox.size(), np = s.pbox.size();
  const double sgn = spec.reversed ? -1.0 : 1.0;
  s.W.reserve(nq * np);
  for (long iq = 0; iq < nq; ++iq) {
    Vec q = s.qbox.node(iq);
    if (!pot.in_domain(q)) throw Error("grid-exits-domain", "phase grid leaves the domain of " + pot.id());
    bool flag = false;
    for (int k = 0; k < d; ++k) {
      for (double side : {-2.0, 2.0}) {
        Vec qq = q;
        qq[k] += side * s.qbox.axes[k].h();
        flag = flag || !pot.in_domain(qq);
      }
    }
    const double U = pot.U(q);
    const Vec g = pot.grad(q);
    const Mat Hs = spec.variant == LyapunovSpec::Exp ? pot.hess(q) : Mat();
    for (long ip = 0; ip < np; ++ip) {
      const Vec p = sgn * s.pbox.node(ip);  // W*(q,p) = W(q,-p) and L*W* = (LW)(q,-p)
      const double H = U + 0.5 * p.squaredNorm();
      double W, LW;
      if (spec.variant == LyapunovSpec::Quad) {
        const double k = spec.quad.kappa;
        W = H + k * q.dot(p);
        LW = -(gamma - k) * p.squaredNorm() - k * g.dot(q) - k * gamma * p.dot(q) + gamma * d;
      } else {
        W = std::exp(exp_exponent(spec.exp, U, p, g));
        LW = spec.exp.eta * exp_ratio(spec.exp, gamma, d, p, g, Hs) * W;
      }
      s.W.push_back(W);
      s.LW.push_back(LW);
      s.H.push_back(H);
      s.gnorm.push_back(g.norm());
      s.flagged.push_back(flag);
      s.edge.push_back(near_face(s.qbox, iq) || near_face(s.pbox, ip));
      s.qidx.push_back(iq);
      s.pidx.push_back(ip);
    }
  }
  return s;
}

double region_scale(double gamma) { return std::max(gamma, 1.0); }

bool region_member(const Scan& s, long k, double D, double gamma) {
  const Vec p = s.pbox.node(s.pidx[k]);
  return p.norm() > D || s.gnorm[k] > D * region_scale(gamma);
}

long sup_index(const Scan& s, double alpha, bool skip_flagged) {
  long best = -1;
  double bv = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < s.W.size(); ++k) {
    if (skip_flagged && s.flagged[k]) continue;
    const double v = s.LW[k] + alpha * s.W[k];
    if (v > bv) {
      bv = v;
      best = static_cast<long>(k);
    }
  }
  return best;
}

double beta_of(const Scan& s, double alpha) {
  const long k = sup_index(s, alpha, false);
  return k < 0 ? 0.0 : std::max(0.0, s.LW[k] + alpha * s.W[k]);
}

}  // namespace

LyapunovSpec reverse(LyapunovSpec spec) {
  spec.reversed = !spec.reversed;
  return spec;
}

double hamiltonian(const PotentialSpec& pot, const PhasePoint& x) {
  return pot.U(x.q) + 0.5 * x.p.squaredNorm();
}

double evaluate(const PotentialSpec& pot, const LyapunovSpec& spec, const PhasePoint& x0) {
  check_domain(pot, x0.q);
  const PhasePoint x = spec.reversed ? mirrored(x0) : x0;
  const double H = hamiltonian(pot, x);
  if (spec.variant == LyapunovSpec::Quad) return H + spec.quad.kappa * x.q.dot(x.p);
  return std::exp(exp_exponent(spec.exp, pot.U(x.q), x.p, pot.grad(x.q)));
}

double quad_cross_drift(const PotentialSpec& pot, double kappa, double gamma, const PhasePoint& x) {
  check_domain(pot, x.q);
  const Vec g = pot.grad(x.q);
  return -(gamma - kappa) * x.p.squaredNorm() - kappa * g.dot(x.q) - kappa * gamma * x.p.dot(x.q) +
         gamma * static_cast<double>(pot.dim());
}

double exp_tilted_drift_ratio(const PotentialSpec& pot, const ExpTilted& spec, double gamma,
                              const PhasePoint& x) {
  check_domain(pot, x.q);
  return exp_ratio(spec, gamma, pot.dim(), x.p, pot.grad(x.q), pot.hess(x.q));
}

double drift(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma, const PhasePoint& x0) {
  const PhasePoint x = spec.reversed ? mirrored(x0) : x0;
  if (spec.variant == LyapunovSpec::Quad) return quad_cross_drift(pot, spec.quad.kappa, gamma, x);
  LyapunovSpec fwd = spec;
  fwd.reversed = false;
  return spec.exp.eta * exp_tilted_drift_ratio(pot, spec.exp, gamma, x) * evaluate(pot, fwd, x);
}

ExpParams select_exp_params(const potentials::GrowthCertificate& cert, double gamma, double eta, int dim) {
  if (!(eta > 0.0 && eta < 1.0) || !(gamma > 0.0) || !(cert.eps > 0.0))
    throw Error("parameter-out-of-range", "need eta in (0,1), gamma > 0 and eps > 0");
  const double slack = 0.5 * (1.0 - eta) - 6.0 * dim * cert.eps;
  if (!(slack > 0.0))
    throw Error("eps-too-large-for-eta", "6 d eps must stay below (1 - eta)/2");
  ExpParams out;
  out.eps = cert.eps;
  out.C_eps = cert.C_eps;
  out.C_eta = 1.0 / slack;
  // sigma must exceed C_eps/eps; the factor 2 keeps a margin, and C_eps = 0 still needs sigma > 0
  const double sigma = cert.C_eps > 0.0 ? 2.0 * cert.C_eps / cert.eps : 1.0;
  out.spec = LyapunovSpec::exp_tilted(eta, 2.0 * gamma * dim, sigma);
  return out;
}

bool in_region(const PotentialSpec& pot, const PhasePoint& x, double D, double gamma) {
  return x.p.norm() > D || pot.grad(x.q).norm() > D * region_scale(gamma);
}

RegionChoice select_region(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma,
                           const GridBox& phase_grid, int max_pow) {
  const Scan s = scan_grid(pot, spec, gamma, phase_grid);
  RegionChoice rc;
  for (int k = 1; k <= max_pow; ++k) {
    const double D = std::ldexp(1.0, k);
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.W.size(); ++i)
      if (region_member(s, static_cast<long>(i), D, gamma)) mx = std::max(mx, s.LW[i] / (gamma * s.W[i]));
    if (mx < 0.0) {
      rc.D = D;
      rc.c = std::isfinite(mx) ? -mx : 0.0;
      rc.found = std::isfinite(mx);
      if (rc.found) return rc;
    }
  }
  return rc;
}

Eigen::Matrix2d kappa_bar_matrix(double kb, double c3, double c5, double gamma) {
  Eigen::Matrix2d M;
  if (gamma <= 1.0) {
    const double off = 0.5 * kb * gamma * (1.0 - 0.5 * c3 * kb);
    M << 0.5 * c3 * c5 * kb, off, off, 1.0 - kb * (1.0 + 0.25 * c3);
  } else {
    const double off = 0.5 * kb * (1.0 - 0.5 * c3 * kb / (gamma * gamma));
    M << 0.5 * c3 * c5 * kb / gamma, off, off, gamma - kb / gamma * (1.0 + 0.25 * c3);
  }
  return M;
}

double select_kappa_bar(double c3, double c5) {
  if (!(c3 > 0.0 && c5 > 0.0)) throw Error("parameter-out-of-range", "need c3, c5 > 0");
  const auto gammas = [] {
    std::vector<double> g;
    for (int i = 0; i <= 120; ++i) g.push_back(std::pow(10.0, -3.0 + 6.0 * i / 120.0));
    g.push_back(1.0);
    return g;
  }();
  for (double kb = 8.0; kb > 1e-12; kb *= 0.5) {
    if (!(kb < std::sqrt(2.0 * c5))) continue;
    bool ok = true;
    for (double g : gammas) {
      const auto M = kappa_bar_matrix(kb, c3, c5, g);
      ok = ok && M(0, 0) > 0.0 && M(1, 1) > 0.0 && M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0) > 0.0;
      if (!ok) break;
    }
    if (ok) return kb;
  }
  return 0.0;
}

DriftReport verify_drift(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma,
                         double alpha_target, const GridBox& phase_grid, const DriftOptions& opt) {
  const Scan s = scan_grid(pot, spec, gamma, phase_grid);
  DriftReport r;
  r.alpha = alpha_target;
  r.gamma = gamma;
  r.grid = describe(phase_grid);
  r.nodes = static_cast<long>(s.W.size());
  r.flagged_nodes = std::count(s.flagged.begin(), s.flagged.end(), 1);

  const long k = sup_index(s, alpha_target, false);
  r.beta = std::max(0.0, s.LW[k] + alpha_target * s.W[k]);
  r.argmax_q = s.qbox.node(s.qidx[k]);
  r.argmax_p = s.pbox.node(s.pidx[k]);
  r.argmax_flagged = s.flagged[k];
  const long ku = sup_index(s, alpha_target, true);
  r.beta_unflagged = ku < 0 ? 0.0 : std::max(0.0, s.LW[ku] + alpha_target * s.W[ku]);

  r.strong_delta = spec.variant == LyapunovSpec::Exp ? 0.5 * std::min(1.0 - spec.exp.eta, 0.5) : 0.5;
  for (size_t i = 0; i < s.W.size(); ++i)
    r.strong_integrability_C =
        std::max(r.strong_integrability_C, s.W[i] * std::exp(-(1.0 - r.strong_delta) * s.H[i]));

  if (opt.region_D > 0.0) {
    r.D = opt.region_D;
    r.region_max_ratio = r.complement_max_ratio = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.W.size(); ++i) {
      const double ratio = s.LW[i] / (gamma * s.W[i]);
      if (region_member(s, static_cast<long>(i), opt.region_D, gamma)) {
        ++r.region_nodes;
        r.region_max_ratio = std::max(r.region_max_ratio, ratio);
      } else {
        ++r.complement_nodes;
        r.complement_max_ratio = std::max(r.complement_max_ratio, ratio);
        r.M_gamma = std::max(r.M_gamma, s.W[i]);
      }
    }
  }
  if (opt.keep_margin) {
    r.margin.resize(s.W.size());
    for (size_t i = 0; i < s.W.size(); ++i) r.margin[i] = r.beta - (s.LW[i] + alpha_target * s.W[i]);
  }
  if (opt.refine) {
    const Scan f = scan_grid(pot, spec, gamma, phase_grid.refined());
    const double bf = beta_of(f, alpha_target);
    r.refinement_ratio = r.beta > 0.0 ? bf / r.beta : (bf > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  return r;
}

double alpha_max(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma, const GridBox& phase_grid) {
  const Scan s = scan_grid(pot, spec, gamma, phase_grid);
  auto good = [&](double a) {
    const long k = sup_index(s, a, false);
    return s.LW[k] + a * s.W[k] <= 0.0 || !(s.flagged[k] || s.edge[k]);
  };
  double lo = 0.0, hi = gamma;
  if (!good(lo)) return 0.0;
  for (int it = 0; it < 60 && good(hi); ++it) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-3 * gamma) {
    const double mid = 0.5 * (lo + hi);
    (good(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace hypolab::lyapunov
