// hypolab command line front end.
#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include "hypolab/bench.hpp"
#include "hypolab/expr.hpp"
#include "hypolab/generator_lab.hpp"
#include "hypolab/hypo_theory.hpp"
#include "hypolab/lyapunov.hpp"
#include "hypolab/potentials.hpp"
#include "hypolab/sampler.hpp"

using namespace hypolab;
using bench::fmt;
using bench::json;

namespace {

struct PotentialArgs {
  std::string name = "harmonic";
  std::string file;
  std::vector<std::string> params;  // key=value

  potentials::PotentialPtr make() const {
    if (!file.empty()) return potentials::from_expression_file(file);
    std::map<std::string, double> p;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("bad-config", "--param expects key=value, got " + kv);
      p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return potentials::catalog(name, p);
  }
};

void add_potential(CLI::App* app, PotentialArgs& a) {
  app->add_option("--potential", a.name, "catalog name");
  app->add_option("--potential-file", a.file, "expression potential (JSON)");
  app->add_option("--param", a.params, "catalog parameter key=value");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("io-error", "cannot write " + path);
  f << text;
}

// Growth certificate, rho and eta_eps for a potential on a q-box.
struct Theory {
  potentials::GrowthCertificate cert;
  double rho = 0.0, eta_eps = 0.0, xi_eps = 0.0;
};

Theory theory(const potentials::PotentialPtr& pot, const std::string& box) {
  Theory t;
  const auto b = potentials::parse_box(box);
  t.cert = potentials::estimate_growth_constants(*pot, b);
  t.rho = generator_lab::poincare_constant(generator_lab::OverdampedOperator(pot, b, pot->dim() > 1)).rho;
  const auto h = hypo_theory::eta_epsilon(t.cert.c1, t.cert.C2, t.cert.eps, t.cert.C_eps);
  t.eta_eps = h.eta_eps;
  t.xi_eps = h.xi_eps;
  return t;
}

json drift_json(const lyapunov::DriftReport& r) {
  return {{"alpha", r.alpha},
          {"beta", r.beta},
          {"gamma", r.gamma},
          {"grid", r.grid},
          {"argmax_q", std::vector<double>(r.argmax_q.data(), r.argmax_q.data() + r.argmax_q.size())},
          {"argmax_p", std::vector<double>(r.argmax_p.data(), r.argmax_p.data() + r.argmax_p.size())},
          {"argmax_flagged", r.argmax_flagged},
          {"beta_unflagged", r.beta_unflagged},
          {"nodes", r.nodes},
          {"flagged_nodes", r.flagged_nodes},
          {"skipped_nodes", r.skipped_nodes},
          {"refinement_ratio", r.refinement_ratio},
          {"strong_integrability", {{"C", r.strong_integrability_C}, {"delta", r.strong_delta}}},
          {"region",
           {{"D", r.D},
            {"region_nodes", r.region_nodes},
            {"complement_nodes", r.complement_nodes},
            {"region_max_ratio", r.region_max_ratio},
            {"complement_max_ratio", r.complement_max_ratio},
            {"M_gamma", r.M_gamma}}}};
}

int cmd_rate(double rho, double eta, const std::string& grid, const std::string& out) {
  const auto parts = parse_axis(grid);  // lo:hi:per_decade
  const auto curve = hypo_theory::rate_curve(hypo_theory::log_grid(parts.lo, parts.hi, parts.n), rho, eta);
  std::string s = "gamma,delta_star,T,D,lambda_minus,lambda,lambda_bar_running\n";
  for (const auto& r : curve.rows)
    s += fmt(r.gamma) + ',' + fmt(r.delta_star) + ',' + fmt(r.T) + ',' + fmt(r.D) + ',' + fmt(r.lambda_minus) + ',' +
         fmt(r.lambda) + ',' + fmt(r.lambda_bar_running) + '\n';
  write_text(out, s);
  const bool ok = std::abs(curve.slope_low - 1.0) <= 0.1 && std::abs(curve.slope_high + 1.0) <= 0.1 &&
                  curve.lambda_bar > 0.0;
  std::cerr << "slope_low " << fmt(curve.slope_low) << "  slope_high " << fmt(curve.slope_high) << "  lambda_bar "
            << fmt(curve.lambda_bar) << "  " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypolab: hypocoercive rate certificates for Langevin dynamics"};
  app.require_subcommand(1);

  // rate
  auto* rate = app.add_subcommand("rate", "rate certificate over a log gamma grid");
  double r_rho = 1.0, r_eta = 2.0;
  std::string r_grid = "1e-3:1e3:10", r_out = "-";
  rate->add_option("--rho", r_rho)->required();
  rate->add_option("--eta-eps", r_eta)->required();
  rate->add_option("--gamma-grid", r_grid, "lo:hi:points_per_decade");
  rate->add_option("--out", r_out);

  // lyapunov
  auto* lyap = app.add_subcommand("lyapunov", "grid drift certificate for a Lyapunov function");
  PotentialArgs l_pot;
  add_potential(lyap, l_pot);
  std::string l_variant = "exp", l_grid, l_growth, l_out = "-";
  double l_gamma = 1.0, l_alpha = NAN, l_eta = 0.5, l_eps = 1.0 / 32.0, l_c3 = 2.0, l_c5 = 0.5, l_D = 0.0;
  bool l_reversed = false;
  lyap->add_option("--variant", l_variant)->check(CLI::IsMember({"exp", "quad"}));
  lyap->add_option("--gamma", l_gamma);
  lyap->add_option("--alpha", l_alpha, "default: alpha_max by bisection");
  lyap->add_option("--grid", l_grid, "phase box q..,p..")->required();
  lyap->add_option("--growth-grid", l_growth, "q-box for growth constants (default: q part of --grid)");
  lyap->add_option("--eta", l_eta);
  lyap->add_option("--eps", l_eps);
  lyap->add_option("--c3", l_c3);
  lyap->add_option("--c5", l_c5);
  lyap->add_option("--region-D", l_D, "0: ladder search");
  lyap->add_flag("--reversed", l_reversed, "certify W* under the adjoint");
  lyap->add_option("--out", l_out);

  // spectral
  auto* spec = app.add_subcommand("spectral", "spectral gap of the discretized kinetic generator (d = 1)");
  PotentialArgs s_pot;
  add_potential(spec, s_pot);
  double s_gamma = 1.0;
  std::string s_grid = "-6:6:385", s_growth, s_out = "-";
  int s_modes = 32;
  spec->add_option("--gamma", s_gamma);
  spec->add_option("--grid", s_grid, "q axis lo:hi:n");
  spec->add_option("--modes", s_modes, "Hermite modes in p");
  spec->add_option("--growth-grid", s_growth, "q-box for the rate certificate (default: --grid)");
  spec->add_option("--out", s_out);

  // verify-ops
  auto* ops = app.add_subcommand("verify-ops", "operator inequality suite on random test functions");
  PotentialArgs o_pot;
  add_potential(ops, o_pot);
  unsigned o_seed = 1;
  int o_n = 200, o_modes = 16;
  double o_gamma = 1.0;
  std::string o_grid = "-6:6:193", o_growth, o_out = "-";
  ops->add_option("--seed", o_seed);
  ops->add_option("--n", o_n, "number of test functions");
  ops->add_option("--gamma", o_gamma);
  ops->add_option("--grid", o_grid, "q axis lo:hi:n");
  ops->add_option("--modes", o_modes);
  ops->add_option("--growth-grid", o_growth);
  ops->add_option("--out", o_out);

  // simulate
  auto* sim = app.add_subcommand("simulate", "ensemble decay of an observable");
  PotentialArgs m_pot;
  add_potential(sim, m_pot);
  sampler::EnsembleConfig ec;
  std::string m_obs = "q", m_out = "-";
  sim->add_option("--gamma", ec.gamma);
  sim->add_option("--scheme", ec.integ.scheme)->check(CLI::IsMember({"baoab", "euler-maruyama"}));
  sim->set_help_flag("--help", "Print this help message and exit");
  sim->add_option("--h", ec.integ.h, "step size");
  sim->add_option("--ntraj", ec.n_traj);
  sim->add_option("--T", ec.T);
  sim->add_option("--observable", m_obs);
  sim->add_option("--seed", ec.seed);
  sim->add_option("--out", m_out);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run the suites of an experiment config");
  std::string w_config;
  bool w_plot = false;
  sweep->add_option("--config", w_config)->required();
  sweep->add_flag("--emit-plot-data", w_plot, "also write plot_rates.csv");

  // acceptance
  auto* acc = app.add_subcommand("acceptance", "run the acceptance criteria");
  bool a_nosampler = false;
  std::vector<int> a_only;
  acc->add_flag("--no-sampler", a_nosampler, "skip sampler-tagged criteria");
  acc->add_option("--only", a_only, "criterion ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rate) return cmd_rate(r_rho, r_eta, r_grid, r_out);

    if (*lyap) {
      const auto pot = l_pot.make();
      const auto grid = potentials::parse_box(l_grid);
      const int d = pot->dim();
      lyapunov::LyapunovSpec ls;
      json extra;
      if (l_variant == "exp") {
        std::string gb = l_growth;
        if (gb.empty()) {
          for (int i = 0; i < d; ++i) {
            const auto& a = grid.axes[i];
            gb += (i ? "," : "") + fmt(a.lo) + ":" + fmt(a.hi) + ":" + std::to_string(a.n);
          }
        }
        const auto cert = potentials::estimate_growth_constants(*pot, potentials::parse_box(gb), {l_eps, 0.0});
        const auto ep = lyapunov::select_exp_params(cert, l_gamma, l_eta, d);
        ls = ep.spec;
        extra = {{"eta", ep.spec.exp.eta}, {"kappa", ep.spec.exp.kappa}, {"sigma", ep.spec.exp.sigma},
                 {"C_eta", ep.C_eta}, {"eps", ep.eps}, {"C_eps", ep.C_eps}};
      } else {
        const double kb = lyapunov::select_kappa_bar(l_c3, l_c5);
        const double s = std::min(l_gamma, 1.0 / l_gamma);
        ls = lyapunov::LyapunovSpec::quad_cross(kb * s);
        if (std::isnan(l_alpha)) l_alpha = 0.5 * kb * l_c3 * s;
        extra = {{"kappa_bar", kb}, {"kappa", kb * s}};
      }
      if (l_reversed) ls = lyapunov::reverse(ls);
      if (std::isnan(l_alpha)) l_alpha = lyapunov::alpha_max(*pot, ls, l_gamma, grid);
      lyapunov::DriftOptions o;
      o.region_D = l_D > 0.0 ? l_D : lyapunov::select_region(*pot, ls, l_gamma, grid).D;
      const auto rep = lyapunov::verify_drift(*pot, ls, l_gamma, l_alpha, grid, o);
      json j = drift_json(rep);
      j["variant"] = l_variant;
      j["reversed"] = l_reversed;
      j["parameters"] = extra;
      write_text(l_out, j.dump(2) + "\n");
      return std::isfinite(rep.beta) && rep.alpha > 0.0 ? 0 : 1;
    }

    if (*spec) {
      const auto pot = s_pot.make();
      generator_lab::PhaseGrid pg;
      pg.q = parse_axis(s_grid);
      pg.n_modes = s_modes;
      const generator_lab::KineticOperator op(pot, pg, s_gamma);
      const auto gap = generator_lab::spectral_gap(op);
      const auto th = theory(pot, s_growth.empty() ? s_grid : s_growth);
      const double lambda = hypo_theory::optimize_delta(s_gamma, th.rho, th.eta_eps).cert.lambda;
      json j = {{"gamma", s_gamma},
                {"gap", gap.gap},
                {"leading", {gap.leading.real(), gap.leading.imag()}},
                {"residual", gap.residual},
                {"iterations", gap.iterations},
                {"lambda", lambda},
                {"rho", th.rho},
                {"eta_eps", th.eta_eps},
                {"lambda_le_gap", lambda <= gap.gap}};
      write_text(s_out, j.dump(2) + "\n");
      return lambda <= gap.gap ? 0 : 1;
    }

    if (*ops) {
      const auto pot = o_pot.make();
      generator_lab::PhaseGrid pg;
      pg.q = parse_axis(o_grid);
      pg.n_modes = o_modes;
      const generator_lab::KineticOperator op(pot, pg, o_gamma);
      const auto th = theory(pot, o_growth.empty() ? o_grid : o_growth);
      const double rho_h = generator_lab::poincare_constant(op.overdamped(), false).rho;
      const auto rep = generator_lab::verify_operator_suite(op, rho_h, th.eta_eps, o_n, o_seed);
      json s = json::array();
      for (const auto& st : rep.stats)
        s.push_back({{"name", st.name}, {"max_ratio", st.max_ratio}, {"violations", st.violations},
                     {"tolerance", st.tolerance}});
      json j = {{"stats", s},
                {"equality_ratio_p", rep.equality_ratio_p},
                {"AL_OU_identity_error", rep.AL_OU_identity_error},
                {"rho", rep.rho},
                {"eta_eps", rep.eta_eps},
                {"pass", rep.pass}};
      write_text(o_out, j.dump(2) + "\n");
      return rep.pass ? 0 : 1;
    }

    if (*sim) {
      const auto pot = m_pot.make();
      const int d = pot->dim();
      const expr::Expression ob(m_obs, expr::qp_names(d));
      const sampler::Observable phi = [&](const Vec& q, const Vec& p) {
        Vec x(2 * d);
        x << q, p;
        return ob.value(x);
      };
      const auto est = sampler::simulate_ensemble(*pot, ec, phi, m_obs, NAN);
      std::string s = "t,mean,stderr\n";
      for (size_t k = 0; k < est.t.size(); ++k)
        s += fmt(est.t[k]) + ',' + fmt(est.mean[k]) + ',' + fmt(est.stderr_[k]) + '\n';
      s += "# rate " + fmt(est.rate) + " ci " + fmt(est.ci_lo) + " " + fmt(est.ci_hi) + " omega " + fmt(est.omega) +
           " window " + fmt(est.window_lo) + " " + fmt(est.window_hi) + " mu_phi " + fmt(est.mu_phi) +
           " invalid " + std::to_string(est.invalid) + "\n";
      write_text(m_out, s);
      return 0;
    }

    if (*sweep) {
      const auto rep = bench::run(bench::load_config(w_config), w_plot);
      for (const auto& [k, v] : rep.verdicts) std::cout << (v ? "PASS " : "FAIL ") << k << "\n";
      return rep.all_pass() ? 0 : 1;
    }

    if (*acc) {
      bench::AcceptanceOptions o;
      o.run_sampler = !a_nosampler;
      o.only.insert(a_only.begin(), a_only.end());
      bool ok = true;
      for (const auto& r : bench::run_acceptance(o)) ok = ok && r.pass;
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
