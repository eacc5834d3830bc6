#include "hypolab/hypo_theory.hpp"

#include <algorithm>
#include <cmath>

namespace hypolab::hypo_theory {

HypoConstants eta_epsilon(double c1, double C2, double eps, double C_eps) {
  const double w = (1.0 - c1) * (1.0 - c1);
  if (!(c1 > 0.0 && c1 < 1.0) || !(eps > 0.0) || !(eps < w / 4.0) || C2 < 0.0 || C_eps < 0.0)
    throw Error("eps-out-of-window", "need 0 < eps < (1-c1)^2/4 with c1 in (0,1) and C2, C_eps >= 0");
  const double pre = 1.0 / (1.0 - 4.0 * eps / w);
  const double mx = std::max(1.0, 0.5 * (C_eps + 2.0 * C2 * eps / (1.0 - c1)));
  HypoConstants h;
  h.eta_eps = std::sqrt(2.0 * pre * mx);
  h.xi_eps = 0.5 * h.eta_eps * h.eta_eps;
  return h;
}

RateCertificate dissipation_matrix(double gamma, double delta, double rho, double eta_eps) {
  RateCertificate c;
  c.gamma = gamma;
  c.delta = delta;
  c.rho = rho;
  c.eta_eps = eta_eps;
  const double off = -0.5 * delta * (eta_eps + 0.5 * gamma);
  c.B << 2.0 * gamma - delta, off, off, delta * rho / (1.0 + rho);
  c.T = c.B(0, 0) + c.B(1, 1);
  c.D = c.B(0, 0) * c.B(1, 1) - off * off;
  // T^2/4 - D = ((B11 - B22)/2)^2 + B12^2 >= 0
  const double s = std::hypot(0.5 * (c.B(0, 0) - c.B(1, 1)), off);
  c.Lambda_plus = 0.5 * c.T + s;
  c.Lambda_minus = c.Lambda_plus > 0.0 ? c.D / c.Lambda_plus : 0.5 * c.T - s;
  c.lambda = c.Lambda_minus / 5.0;
  c.contractive = c.D > 0.0;
  return c;
}

double delta_max(double gamma, double rho, double eta_eps) {
  const double a = eta_eps + 0.5 * gamma;
  return std::min(1.0, 2.0 * gamma / (1.0 + (1.0 + rho) / (4.0 * rho) * a * a));
}

DeltaOptimum optimize_delta(double gamma, double rho, double eta_eps) {
  const double dmax = delta_max(gamma, rho, eta_eps);
  if (!(dmax > 0.0)) throw Error("degenerate-window", "delta_max must be positive");
  auto f = [&](double d) { return dissipation_matrix(gamma, d, rho, eta_eps).Lambda_minus; };

  constexpr int kScan = 64;
  std::vector<double> xs(kScan), fs(kScan);
  for (int k = 0; k < kScan; ++k) {
    xs[k] = dmax * (k + 0.5) / kScan;
    fs[k] = f(xs[k]);
  }
  int kmax = static_cast<int>(std::max_element(fs.begin(), fs.end()) - fs.begin());
  bool unimodal = true;
  for (int k = 1; k <= kmax; ++k) unimodal = unimodal && fs[k] >= fs[k - 1];
  for (int k = kmax + 1; k < kScan; ++k) unimodal = unimodal && fs[k] <= fs[k - 1];

  DeltaOptimum out;
  out.unimodal = unimodal;
  if (unimodal) {
    double a = kmax > 0 ? xs[kmax - 1] : 0.0;
    double b = kmax + 1 < kScan ? xs[kmax + 1] : dmax;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-8 * b) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = f(x1);
      }
    }
    out.delta_star = 0.5 * (a + b);
  } else {
    constexpr int kFine = 10000;
    double best = -1e300;
    for (int k = 0; k < kFine; ++k) {
      double d = dmax * (k + 0.5) / kFine, v = f(d);
      if (v > best) {
        best = v;
        out.delta_star = d;
      }
    }
  }
  out.cert = dissipation_matrix(gamma, out.delta_star, rho, eta_eps);
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  const double decades = std::log10(hi / lo);
  const int n = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = lo * std::pow(10.0, decades * i / n);
  return g;
}

RateCurve rate_curve(const std::vector<double>& gammas, double rho, double eta_eps) {
  if (gammas.size() < 2) throw Error("insufficient-points", "need a gamma list");
  std::vector<double> g = gammas;
  std::sort(g.begin(), g.end());
  const double lo = g.front(), hi = g.back();
  if (!(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-9))
    throw Error("insufficient-points", "gamma list must span at least two decades");

  RateCurve c;
  double running = 1e300;
  for (double gm : gammas) {
    auto o = optimize_delta(gm, rho, eta_eps);
    running = std::min(running, o.cert.lambda / std::min(gm, 1.0 / gm));
    c.rows.push_back({gm, o.delta_star, o.cert.T, o.cert.D, o.cert.Lambda_minus, o.cert.lambda, running});
  }
  c.lambda_bar = running;

  std::vector<double> xl, yl, xh, yh;
  for (const auto& r : c.rows) {
    if (r.gamma <= lo * 10.0 * (1.0 + 1e-9)) {
      xl.push_back(r.gamma);
      yl.push_back(r.lambda);
    }
    if (r.gamma >= hi / 10.0 * (1.0 - 1e-9)) {
      xh.push_back(r.gamma);
      yh.push_back(r.lambda);
    }
  }
  if (xl.size() < 7 || xh.size() < 7)
    throw Error("insufficient-points", "need at least 7 points in the lowest and highest decades");
  c.slope_low = loglog_slope(xl, yl);
  c.slope_high = loglog_slope(xh, yh);
  return c;
}

WeightedRateCertificate weighted_rate(double lambda, double alpha, double beta, double eta) {
  if (!(lambda > 0.0 && alpha > 0.0 && beta > 0.0 && eta > 0.0 && eta < 1.0))
    throw Error("parameter-out-of-range", "need lambda, alpha, beta > 0 and eta in (0,1)");
  WeightedRateCertificate w;
  w.lambda = lambda;
  w.alpha = alpha;
  w.beta = beta;
  w.eta = eta;
  w.m = 5.0 * eta * lambda / beta;
  w.rate = std::min(lambda * (1.0 - eta), 0.5 * alpha);
  return w;
}

}  // namespace hypolab::hypo_theory
