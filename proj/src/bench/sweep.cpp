#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypolab/expr.hpp"
#include "hypolab/hypo_theory.hpp"
#include "hypolab/lyapunov.hpp"
#include "hypolab/sampler.hpp"
#include "internal.hpp"

namespace hypolab::bench {

namespace gl = generator_lab;

bool SweepReport::all_pass() const {
  for (const auto& [k, v] : verdicts)
    if (!v) return false;
  return true;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

SweepReport run_impl(const ExperimentConfig& c) {
  SweepReport rep;
  const auto pot = make_potential(c);
  const int d = pot->dim();
  const auto box = potentials::parse_box(c.growth_grid);

  // growth constants -> rho -> eta_eps
  const auto cert = detail::growth(*pot, box, {});
  const auto pbox = c.poincare_grid.empty() ? box : potentials::parse_box(c.poincare_grid);
  rep.rho = detail::poincare(pot, pbox, d > 1);
  const auto hc = hypo_theory::eta_epsilon(cert.c1, cert.C2, cert.eps, cert.C_eps);
  rep.eta_eps = hc.eta_eps;
  rep.certificates["growth"] = detail::to_json(cert);
  rep.certificates["growth"]["rho"] = rep.rho;
  rep.certificates["eta_eps"] = hc.eta_eps;
  rep.certificates["xi_eps"] = hc.xi_eps;

  for (double g : c.gammas) {
    SweepRow r;
    r.gamma = g;
    const auto o = hypo_theory::optimize_delta(g, rep.rho, rep.eta_eps);
    r.lambda = o.cert.lambda;
    r.delta_star = o.delta_star;
    rep.rows.push_back(r);
  }

  if (c.suites.count("rates")) {
    bool ok = true;
    for (const auto& r : rep.rows) ok = ok && r.lambda > 0.0;
    try {
      const auto curve = hypo_theory::rate_curve(c.gammas, rep.rho, rep.eta_eps);
      rep.lambda_bar = curve.lambda_bar;
      rep.slope_low = curve.slope_low;
      rep.slope_high = curve.slope_high;
      ok = ok && std::abs(curve.slope_low - 1.0) <= 0.1 && std::abs(curve.slope_high + 1.0) <= 0.1 &&
           curve.lambda_bar > 0.0;
    } catch (const Error& e) {
      if (e.code() != "insufficient-points") throw;
      double lb = 1e300;
      for (const auto& r : rep.rows) lb = std::min(lb, r.lambda / std::min(r.gamma, 1.0 / r.gamma));
      rep.lambda_bar = lb;
    }
    rep.verdicts["rates"] = ok;
  }

  if (c.suites.count("lyapunov")) {
    const auto grid = potentials::parse_box(c.phase_grid);
    bool ok = true;
    for (auto& r : rep.rows) {
      lyapunov::LyapunovSpec spec;
      if (c.lyapunov_variant == "exp") {
        const auto lc = detail::growth(*pot, box, {c.lyapunov_eps, 0.0});
        spec = lyapunov::select_exp_params(lc, r.gamma, c.eta, d).spec;
        r.alpha = lyapunov::alpha_max(*pot, spec, r.gamma, grid);
      } else {
        const double kb = lyapunov::select_kappa_bar(c.c3, c.c5);
        const double s = std::min(r.gamma, 1.0 / r.gamma);
        spec = lyapunov::LyapunovSpec::quad_cross(kb * s);
        r.alpha = 0.5 * kb * c.c3 * s;
      }
      lyapunov::DriftOptions dopt;
      dopt.refine = false;
      r.beta = lyapunov::verify_drift(*pot, lyapunov::reverse(spec), r.gamma, r.alpha, grid, dopt).beta;
      if (r.alpha > 0.0 && r.beta > 0.0) {
        const auto w = hypo_theory::weighted_rate(r.lambda, r.alpha, r.beta, c.eta);
        r.m = w.m;
        r.weighted_rate = w.rate;
      }
      ok = ok && r.alpha > 0.0 && std::isfinite(r.beta);
    }
    rep.verdicts["lyapunov"] = ok;
  }

  if (c.suites.count("operators")) {
    gl::PhaseGrid pg;
    pg.q = parse_axis(c.kinetic_q);
    pg.n_modes = c.kinetic_modes;
    const gl::KineticOperator op(pot, pg, c.gammas.front());
    const double rho_h = gl::poincare_constant(op.overdamped(), false).rho;
    const auto ops = gl::verify_operator_suite(op, rho_h, rep.eta_eps, 50, static_cast<unsigned>(c.seed));
    json s = json::array();
    for (const auto& st : ops.stats)
      s.push_back({{"name", st.name}, {"max_ratio", st.max_ratio}, {"violations", st.violations}});
    rep.certificates["operators"] = {{"stats", s}, {"AL_OU_identity_error", ops.AL_OU_identity_error},
                                     {"equality_ratio_p", ops.equality_ratio_p}};
    rep.verdicts["operators"] = ops.pass;
  }

  if (c.suites.count("spectral")) {
    if (d != 1) throw Error("bad-config", "spectral suite needs d = 1");
    bool ok = true;
    for (auto& r : rep.rows) {
      gl::PhaseGrid pg;
      pg.q = parse_axis(c.kinetic_q);
      pg.n_modes = c.kinetic_modes;
      const gl::KineticOperator op(pot, pg, r.gamma);
      r.gap = gl::spectral_gap(op).gap;
      ok = ok && r.lambda <= r.gap;
    }
    rep.verdicts["spectral"] = ok;
  }

  if (c.suites.count("simulate")) {
    const expr::Expression ob(c.observable, expr::qp_names(d));
    const sampler::Observable phi = [&](const Vec& q, const Vec& p) {
      Vec x(2 * d);
      x << q, p;
      return ob.value(x);
    };
    bool ok = true;
    for (auto& r : rep.rows) {
      sampler::EnsembleConfig ec;
      ec.gamma = r.gamma;
      ec.integ.h = c.sim_h;
      ec.n_traj = c.n_traj;
      ec.T = c.sim_T;
      ec.seed = c.seed;
      const auto est = sampler::simulate_ensemble(*pot, ec, phi, c.observable, NAN);
      r.empirical_rate = est.rate;
      r.empirical_ci_lo = est.ci_lo;
      r.empirical_ci_hi = est.ci_hi;
      ok = ok && est.rate >= r.lambda - (est.ci_hi - est.ci_lo);
    }
    rep.verdicts["simulate"] = ok;
  }
  return rep;
}

}  // namespace

json to_json(const SweepReport& r) {
  json rows = json::array();
  for (const auto& w : r.rows)
    rows.push_back({{"gamma", w.gamma},
                    {"lambda", w.lambda},
                    {"delta_star", w.delta_star},
                    {"alpha", num(w.alpha)},
                    {"beta", num(w.beta)},
                    {"m", num(w.m)},
                    {"weighted_rate", num(w.weighted_rate)},
                    {"gap", num(w.gap)},
                    {"empirical_rate", num(w.empirical_rate)},
                    {"empirical_ci", {num(w.empirical_ci_lo), num(w.empirical_ci_hi)}}});
  return {{"rows", rows},
          {"lambda_bar", num(r.lambda_bar)},
          {"slope_low", num(r.slope_low)},
          {"slope_high", num(r.slope_high)},
          {"rho", num(r.rho)},
          {"eta_eps", num(r.eta_eps)},
          {"certificates", r.certificates},
          {"verdicts", r.verdicts}};
}

std::string to_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "gamma,lambda,delta_star,alpha,beta,m,weighted_rate,gap,empirical_rate,empirical_ci_lo,empirical_ci_hi\n";
  for (const auto& w : r.rows)
    os << fmt(w.gamma) << ',' << fmt(w.lambda) << ',' << fmt(w.delta_star) << ',' << fmt(w.alpha) << ','
       << fmt(w.beta) << ',' << fmt(w.m) << ',' << fmt(w.weighted_rate) << ',' << fmt(w.gap) << ','
       << fmt(w.empirical_rate) << ',' << fmt(w.empirical_ci_lo) << ',' << fmt(w.empirical_ci_hi) << '\n';
  return os.str();
}

SweepReport run(const ExperimentConfig& c, bool emit_plot_data) {
  SweepReport rep;
  try {
    rep = run_impl(c);
  } catch (const Error& e) {
    throw Error(e.code(), c.source + ": " + e.what());
  }
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  std::ofstream(fs::path(c.out_dir) / "sweep.csv") << to_csv(rep);
  std::ofstream(fs::path(c.out_dir) / "sweep.json") << to_json(rep).dump(2) << '\n';
  {
    std::ofstream s(fs::path(c.out_dir) / "summary.txt");
    s << "potential " << (c.potential_file.empty() ? c.potential : c.potential_file) << "\n";
    s << "rho " << fmt(rep.rho) << "  eta_eps " << fmt(rep.eta_eps) << "\n";
    s << "lambda_bar " << fmt(rep.lambda_bar) << "  slopes " << fmt(rep.slope_low) << " / " << fmt(rep.slope_high)
      << "\n";
    for (const auto& [k, v] : rep.verdicts) s << (v ? "PASS " : "FAIL ") << k << "\n";
  }
  if (emit_plot_data) {
    std::ofstream p(fs::path(c.out_dir) / "plot_rates.csv");
    p << "gamma,lambda,lambda_over_min,gap,empirical_rate\n";
    for (const auto& w : rep.rows)
      p << fmt(w.gamma) << ',' << fmt(w.lambda) << ',' << fmt(w.lambda / std::min(w.gamma, 1.0 / w.gamma)) << ','
        << fmt(w.gap) << ',' << fmt(w.empirical_rate) << '\n';
  }
  return rep;
}

}  // namespace hypolab::bench
