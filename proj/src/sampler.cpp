#include "hypolab/sampler.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numeric>

namespace hypolab::sampler {

// ------------------------------------------------------------------ Philox

Philox::Philox(std::uint64_t seed, std::uint64_t stream) {
  key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  ctr_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

void Philox::refill() {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u, W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  std::array<std::uint32_t, 4> x = ctr_;
  std::array<std::uint32_t, 2> k = key_;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * x[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * x[2];
    const std::uint32_t hi0 = p0 >> 32, lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = p1 >> 32, lo1 = static_cast<std::uint32_t>(p1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  out_ = x;
  pos_ = 0;
  if (++ctr_[0] == 0) ++ctr_[1];
}

Philox::result_type Philox::operator()() {
  if (pos_ == 4) refill();
  return out_[pos_++];
}

double Philox::uniform() {
  const std::uint64_t a = (*this)() >> 5, b = (*this)() >> 6;
  return (static_cast<double>(a * 67108864u + b) + 0.5) / 9007199254740992.0;
}

double Philox::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double th = 2.0 * M_PI * uniform();
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

// -------------------------------------------------------------- integrators

namespace {

Vec normals(Philox& rng, int d) {
  Vec z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  return z;
}

// One unguarded step; false if the proposal leaves the domain or climbs more than max_dU.
bool try_step(State& x, const PotentialSpec& pot, double gamma, const std::string& scheme, double h,
              double max_dU, Philox& rng) {
  const int d = pot.dim();
  const double U0 = pot.U(x.q);
  State y = x;
  if (scheme == "euler-maruyama") {
    const Vec g = pot.grad(x.q);
    y.q = x.q + h * x.p;
    y.p = x.p - h * g - h * gamma * x.p + std::sqrt(2.0 * gamma * h) * normals(rng, d);
  } else {
    y.p -= 0.5 * h * pot.grad(y.q);
    y.q += 0.5 * h * y.p;
    if (!pot.in_domain(y.q)) return false;
    const double e = std::exp(-gamma * h);
    y.p = e * y.p + std::sqrt(-std::expm1(-2.0 * gamma * h)) * normals(rng, d);
    y.q += 0.5 * h * y.p;
    if (!pot.in_domain(y.q)) return false;
    y.p -= 0.5 * h * pot.grad(y.q);
  }
  if (!pot.in_domain(y.q)) return false;
  const double U1 = pot.U(y.q);
  if (!std::isfinite(U1) || U1 - U0 > max_dU || !y.p.allFinite()) return false;
  x = std::move(y);
  return true;
}

bool guarded(State& x, const PotentialSpec& pot, double gamma, const IntegratorConfig& cfg, double h, Philox& rng,
             StepStats& st) {
  if (try_step(x, pot, gamma, cfg.scheme, h, cfg.max_dU, rng)) return true;
  if (0.5 * h < cfg.h_min) {
    ++st.rejects;
    return false;
  }
  ++st.halvings;
  const bool a = guarded(x, pot, gamma, cfg, 0.5 * h, rng, st);
  const bool b = guarded(x, pot, gamma, cfg, 0.5 * h, rng, st);
  return a && b;
}

}  // namespace

bool step(State& x, const PotentialSpec& pot, double gamma, const IntegratorConfig& cfg, Philox& rng,
          StepStats& st) {
  if (!pot.in_domain(x.q)) throw Error("out-of-domain", "state outside the domain");
  ++st.steps;
  const bool ok = guarded(x, pot, gamma, cfg, cfg.h, rng, st);
  st.consecutive_rejects = ok ? 0 : st.consecutive_rejects + 1;
  if (st.consecutive_rejects >= 50) st.invalid = true;
  return ok;
}

// -------------------------------------------------------------- decay fits

namespace {

// Best (a, b) for fixed (r, w); returns the residual sum of squares.
double project_fit(const std::vector<double>& t, const std::vector<double>& m, double r, double w, double& a,
                   double& b) {
  double s11 = 0, s12 = 0, s22 = 0, y1 = 0, y2 = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double e = std::exp(-r * t[i]);
    const double c = e * std::cos(w * t[i]), s = e * std::sin(w * t[i]);
    s11 += c * c;
    s12 += c * s;
    s22 += s * s;
    y1 += c * m[i];
    y2 += s * m[i];
  }
  const double det = s11 * s22 - s12 * s12;
  if (det > 1e-12 * s11 * s22 && s22 > 0.0) {
    a = (y1 * s22 - y2 * s12) / det;
    b = (s11 * y2 - s12 * y1) / det;
  } else {
    a = s11 > 0.0 ? y1 / s11 : 0.0;
    b = 0.0;
  }
  double sse = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double e = std::exp(-r * t[i]);
    const double f = e * (a * std::cos(w * t[i]) + b * std::sin(w * t[i]));
    sse += (m[i] - f) * (m[i] - f);
  }
  return sse;
}

}  // namespace

DecayFit fit_damped_exponential(const std::vector<double>& t, const std::vector<double>& m) {
  DecayFit f;
  double a, b, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 80; ++i) {
    const double r = 1e-3 * std::pow(5e3, i / 80.0);
    for (int j = 0; j <= 80; ++j) {
      const double w = 5.0 * j / 80.0;
      const double s = project_fit(t, m, r, w, a, b);
      if (s < best) {
        best = s;
        f.rate = r;
        f.omega = w;
      }
    }
  }
  // pattern search refinement in (log r, w)
  double lr = std::log(f.rate), w = f.omega, dl = 0.1, dw = 0.0625;
  while (dl > 1e-9 || dw > 1e-9) {
    bool moved = false;
    for (auto [a1, a2] : {std::pair{dl, 0.0}, {-dl, 0.0}, {0.0, dw}, {0.0, -dw}}) {
      const double w2 = std::max(0.0, w + a2);
      const double s = project_fit(t, m, std::exp(lr + a1), w2, a, b);
      if (s < best) {
        best = s;
        lr += a1;
        w = w2;
        moved = true;
      }
    }
    if (!moved) {
      dl *= 0.5;
      dw *= 0.5;
    }
  }
  f.rate = std::exp(lr);
  f.omega = w;
  project_fit(t, m, f.rate, f.omega, f.a, f.b);
  const double mean = std::accumulate(m.begin(), m.end(), 0.0) / m.size();
  double sst = 0.0;
  for (double v : m) sst += (v - mean) * (v - mean);
  f.r2 = sst > 0.0 ? 1.0 - best / sst : 0.0;
  return f;
}

// ------------------------------------------------------------ mu averages

namespace {

// Interval around the reference point where U - U(ref) <= 40 (d = 1).
Axis auto_axis(const PotentialSpec& pot) {
  const double x0 = pot.reference_point()[0];
  const double U0 = pot.U1(x0);
  auto walk = [&](double dir) {
    double x = x0;
    for (int k = 0; k < 200000; ++k) {
      const double y = x + dir * 0.005;
      if (!pot.in_domain(Vec::Constant(1, y)) || pot.U1(y) - U0 > 40.0) break;
      x = y;
    }
    return x;
  };
  return Axis{walk(-1.0), walk(1.0), 2};
}

constexpr int kGH = 40;

// int f(q, p) dmu using Gauss-Kronrod in q and Gauss-Hermite in p (d = 1).
std::pair<double, double> quad_mu_1d(const PotentialSpec& pot, const Observable& phi, const Axis& ax) {
  static const auto gh = [] {
    std::vector<double> n, w;
    Mat J = Mat::Zero(kGH, kGH);
    for (int k = 1; k < kGH; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    for (int i = 0; i < kGH; ++i) {
      n.push_back(es.eigenvalues()[i]);
      w.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
    }
    return std::pair{n, w};
  }();
  const double Umin = pot.U(pot.reference_point());
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err_z = 0.0, err_n = 0.0;
  auto boltz = [&](double q) {
    Vec v = Vec::Constant(1, q);
    return pot.in_domain(v) ? std::exp(-(pot.U(v) - Umin)) : 0.0;
  };
  const double Z = GK::integrate(boltz, ax.lo, ax.hi, 15, 1e-12, &err_z);
  const double N = GK::integrate(
      [&](double q) {
        const double b = boltz(q);
        if (b == 0.0) return 0.0;
        Vec v = Vec::Constant(1, q), p(1);
        double s = 0.0;
        for (int j = 0; j < kGH; ++j) {
          p[0] = gh.first[j];
          s += gh.second[j] * phi(v, p);
        }
        return b * s;
      },
      ax.lo, ax.hi, 15, 1e-12, &err_n);
  return {N / Z, std::abs(N / Z) * (err_z / Z) + err_n / Z};
}

}  // namespace

MuEstimate estimate_mu_average(const PotentialSpec& pot, const Observable& phi, const MuOptions& opt) {
  MuEstimate m;
  const bool quad = opt.method == "quadrature" || opt.method == "both";
  const bool run = opt.method == "longrun" || opt.method == "both";
  if (!quad && !run) throw Error("bad-config", "unknown method '" + opt.method + "'");
  if (quad) {
    if (pot.dim() != 1 && pot.dim() != 2) throw Error("bad-config", "quadrature needs d <= 2");
    if (pot.dim() == 1) {
      const Axis ax = opt.box.axes.empty() ? auto_axis(pot) : opt.box.axes[0];
      std::tie(m.quadrature, m.quadrature_error) = quad_mu_1d(pot, phi, ax);
    } else {
      if (opt.box.dim() != 2) throw Error("bad-config", "d = 2 quadrature needs a box");
      // nested Gauss-Kronrod in q, momenta by Gauss-Hermite products
      using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
      std::vector<double> gn, gw;
      {
        Mat J = Mat::Zero(kGH, kGH);
        for (int k = 1; k < kGH; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
        Eigen::SelfAdjointEigenSolver<Mat> es(J);
        for (int i = 0; i < kGH; ++i) {
          gn.push_back(es.eigenvalues()[i]);
          gw.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
        }
      }
      const double Umin = pot.U(pot.reference_point());
      const auto& A = opt.box.axes;
      auto inner = [&](bool with_phi) {
        return GK::integrate(
            [&](double x) {
              return GK::integrate(
                  [&](double y) {
                    Vec q(2);
                    q << x, y;
                    if (!pot.in_domain(q)) return 0.0;
                    const double b = std::exp(-(pot.U(q) - Umin));
                    if (!with_phi || b == 0.0) return b;
                    double s = 0.0;
                    Vec p(2);
                    for (int i = 0; i < kGH; ++i)
                      for (int j = 0; j < kGH; ++j) {
                        p << gn[i], gn[j];
                        s += gw[i] * gw[j] * phi(q, p);
                      }
                    return b * s;
                  },
                  A[1].lo, A[1].hi, 5, 1e-9);
            },
            A[0].lo, A[0].hi, 5, 1e-9);
      };
      m.quadrature = inner(true) / inner(false);
      m.quadrature_error = 1e-8 * std::max(1.0, std::abs(m.quadrature));
    }
  }
  if (run) {
    Philox rng(opt.seed, 0);
    IntegratorConfig ic;
    ic.h = opt.h;
    State x{pot.reference_point(), Vec::Zero(pot.dim())};
    StepStats st;
    const long burn = static_cast<long>(50.0 / opt.h);
    for (long k = 0; k < burn; ++k) step(x, pot, opt.gamma, ic, rng, st);
    const int batches = 20;
    const long per = std::max(1L, static_cast<long>(opt.T / opt.h / batches));
    std::vector<double> bm(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
      for (long k = 0; k < per; ++k) {
        step(x, pot, opt.gamma, ic, rng, st);
        bm[b] += phi(x.q, x.p);
      }
      bm[b] /= per;
    }
    const double mean = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
    double v = 0.0;
    for (double y : bm) v += (y - mean) * (y - mean);
    m.longrun = mean;
    m.longrun_error = std::sqrt(v / (batches - 1) / batches);
  }
  if (quad && run) {
    m.disagreement = std::abs(m.quadrature - m.longrun) >
                     3.0 * std::hypot(m.quadrature_error, m.longrun_error);
    m.value = m.quadrature;
    m.error = m.quadrature_error;
  } else if (quad) {
    m.value = m.quadrature;
    m.error = m.quadrature_error;
  } else {
    m.value = m.longrun;
    m.error = m.longrun_error;
  }
  return m;
}

// ---------------------------------------------------------------- ensembles

namespace {

// Inverse-CDF table of exp(-U + tilt phi(q, 0)) on a fine grid (d = 1).
struct InitTable {
  std::vector<double> x, cdf;
  double sample(double u) const {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const size_t i = std::clamp<size_t>(it - cdf.begin(), 1, cdf.size() - 1);
    const double t = (u - cdf[i - 1]) / std::max(cdf[i] - cdf[i - 1], 1e-300);
    return x[i - 1] + t * (x[i] - x[i - 1]);
  }
};

InitTable init_table(const PotentialSpec& pot, const Observable& phi, double tilt) {
  const Axis ax = auto_axis(pot);
  const int n = 20001;
  InitTable tb;
  std::vector<double> lw(n);
  double mx = -std::numeric_limits<double>::infinity();
  const Vec p0 = Vec::Zero(1);
  for (int i = 0; i < n; ++i) {
    const double x = ax.lo + (ax.hi - ax.lo) * i / (n - 1);
    const Vec q = Vec::Constant(1, x);
    tb.x.push_back(x);
    lw[i] = -pot.U(q) + tilt * phi(q, p0);
    mx = std::max(mx, lw[i]);
  }
  tb.cdf.assign(n, 0.0);
  for (int i = 1; i < n; ++i)
    tb.cdf[i] = tb.cdf[i - 1] + 0.5 * (std::exp(lw[i - 1] - mx) + std::exp(lw[i] - mx));
  for (double& c : tb.cdf) c /= tb.cdf.back();
  return tb;
}

}  // namespace

DecayEstimate simulate_ensemble(const PotentialSpec& pot, const EnsembleConfig& cfg, const Observable& phi,
                                const std::string& id, double mu_phi) {
  if (cfg.n_traj < 2) throw Error("bad-config", "need at least two trajectories");
  const int d = pot.dim();
  DecayEstimate est;
  est.observable = id;
  est.h = cfg.integ.h;
  est.mu_phi = std::isnan(mu_phi) ? estimate_mu_average(pot, phi, MuOptions{}).value : mu_phi;

  const int per = std::max(1, static_cast<int>(std::lround(cfg.dt_sample / cfg.integ.h)));
  const double dts = per * cfg.integ.h;
  const int nt = static_cast<int>(std::floor(cfg.T / dts + 1e-9)) + 1;
  for (int k = 0; k < nt; ++k) est.t.push_back(k * dts);

  InitTable tb;
  if (d == 1) tb = init_table(pot, phi, cfg.init.tilt);
  Mat obs(cfg.n_traj, nt);
  std::vector<char> valid(cfg.n_traj, 1);
  for (long j = 0; j < cfg.n_traj; ++j) {
    Philox rng(cfg.seed, static_cast<std::uint64_t>(j));
    State x;
    if (d == 1) {
      x.q = Vec::Constant(1, tb.sample(rng.uniform()));
    } else {
      // tilted overdamped burn-in
      x.q = pot.reference_point();
      const double hb = cfg.integ.h;
      for (int k = 0; k < cfg.init.burn_in; ++k) {
        Vec g = pot.grad(x.q);
        const double e = 1e-6;
        for (int a = 0; a < d; ++a) {
          Vec qp = x.q, qm = x.q;
          qp[a] += e;
          qm[a] -= e;
          g[a] -= cfg.init.tilt * (phi(qp, Vec::Zero(d)) - phi(qm, Vec::Zero(d))) / (2 * e);
        }
        Vec y = x.q - hb * g + std::sqrt(2.0 * hb) * normals(rng, d);
        if (pot.in_domain(y) && pot.U(y) - pot.U(x.q) < cfg.integ.max_dU) x.q = y;
      }
    }
    x.p = normals(rng, d);
    StepStats st;
    obs(j, 0) = phi(x.q, x.p);
    for (int k = 1; k < nt; ++k) {
      for (int s = 0; s < per; ++s) step(x, pot, cfg.gamma, cfg.integ, rng, st);
      obs(j, k) = phi(x.q, x.p);
    }
    est.rejects += st.rejects;
    if (st.invalid) {
      valid[j] = 0;
      ++est.invalid;
    }
  }

  std::vector<long> rows;
  for (long j = 0; j < cfg.n_traj; ++j)
    if (valid[j]) rows.push_back(j);
  const double n = static_cast<double>(rows.size());
  est.n_traj = static_cast<long>(rows.size());
  for (int k = 0; k < nt; ++k) {
    double s = 0.0, s2 = 0.0;
    for (long j : rows) {
      s += obs(j, k);
      s2 += obs(j, k) * obs(j, k);
    }
    const double mean = s / n;
    est.mean.push_back(mean - est.mu_phi);
    est.stderr_.push_back(std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1)));
  }
  int last = -1;
  for (int k = 0; k < nt; ++k)
    if (std::abs(est.mean[k]) > 3.0 * est.stderr_[k]) last = k;
  if (last < 3) throw Error("signal-below-noise", "fewer than four samples above 3 standard errors");
  est.window_lo = est.t[0];
  est.window_hi = est.t[last];
  std::vector<double> tw(est.t.begin(), est.t.begin() + last + 1);
  std::vector<double> mw(est.mean.begin(), est.mean.begin() + last + 1);
  const DecayFit fit = fit_damped_exponential(tw, mw);
  est.rate = fit.rate;
  est.omega = fit.omega;
  est.r2 = fit.r2;

  // nonparametric bootstrap over trajectories
  Philox brng(cfg.seed ^ 0x5bd1e995u, 0xb007);
  std::vector<double> rates;
  for (int b = 0; b < cfg.n_boot; ++b) {
    std::vector<double> mb(last + 1, 0.0);
    for (size_t r = 0; r < rows.size(); ++r) {
      const long j = rows[static_cast<size_t>(brng.uniform() * n) % rows.size()];
      for (int k = 0; k <= last; ++k) mb[k] += obs(j, k);
    }
    for (double& v : mb) v = v / n - est.mu_phi;
    rates.push_back(fit_damped_exponential(tw, mb).rate);
  }
  if (!rates.empty()) {
    std::sort(rates.begin(), rates.end());
    const auto pick = [&](double q) { return rates[static_cast<size_t>(q * (rates.size() - 1) + 0.5)]; };
    est.ci_lo = std::min(pick(0.025), est.rate);
    est.ci_hi = std::max(pick(0.975), est.rate);
  } else {
    est.ci_lo = est.ci_hi = est.rate;
  }
  return est;
}

// ------------------------------------------------------------ Feynman-Kac

FKEstimate feynman_kac_resolvent(const PotentialSpec& pot, const std::function<double(const Vec&)>& phi,
                                 const std::vector<Vec>& qs, const FKConfig& cfg) {
  FKEstimate out;
  const int d = pot.dim();
  const long nsteps = static_cast<long>(std::ceil(cfg.horizon / cfg.h));
  for (size_t i = 0; i < qs.size(); ++i) {
    double s1 = 0.0, s2 = 0.0;
    for (long path = 0; path < cfg.n_paths; ++path) {
      Philox rng(cfg.seed, i * static_cast<std::uint64_t>(cfg.n_paths) + path);
      Vec q = qs[i];
      double t = 0.0, acc = 0.0, fq = phi(q);
      int stuck = 0;
      // recursive halving keeps the path inside the domain
      std::function<void(double)> advance = [&](double h) {
        Vec y = q - h * pot.grad(q) + std::sqrt(2.0 * h) * normals(rng, d);
        if (pot.in_domain(y) && pot.U(y) - pot.U(q) <= cfg.max_dU && y.allFinite()) {
          const double fy = phi(y);
          acc += 0.5 * h * (std::exp(-t) * fq + std::exp(-(t + h)) * fy);
          q = y;
          fq = fy;
          t += h;
          stuck = 0;
          return;
        }
        if (0.5 * h < cfg.h_min) {
          ++out.rejects;
          ++stuck;
          acc += 0.5 * h * (std::exp(-t) + std::exp(-(t + h))) * fq;
          t += h;
          return;
        }
        advance(0.5 * h);
        advance(0.5 * h);
      };
      for (long k = 0; k < nsteps; ++k) {
        advance(cfg.h);
        if (stuck > 50) out.explosion = true;
      }
      s1 += acc;
      s2 += acc * acc;
    }
    const double n = static_cast<double>(cfg.n_paths);
    const double mean = s1 / n;
    out.psi.push_back(mean);
    out.stderr_.push_back(std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1)));
  }
  return out;
}

}  // namespace hypolab::sampler
