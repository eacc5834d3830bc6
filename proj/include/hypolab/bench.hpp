#ifndef HYPOLAB_BENCH_HPP
#define HYPOLAB_BENCH_HPP

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hypolab/potentials.hpp"

namespace hypolab::bench {

using json = nlohmann::json;

/** \brief Declarative sweep description; see README for the JSON schema. */
struct ExperimentConfig {
  std::string source = "<inline>";  // config path, used in error messages

  std::string potential = "harmonic";
  std::map<std::string, double> params;
  std::string potential_file;  // expression potential; overrides `potential`

  std::vector<double> gammas;

  std::string growth_grid;     // q-box for growth constants
  std::string poincare_grid;   // q-box for rho (defaults to growth_grid)
  std::string kinetic_q;       // lo:hi:n, d = 1
  int kinetic_modes = 16;
  std::string phase_grid;      // (q, p) box for Lyapunov certification

  std::string lyapunov_variant = "exp";  // exp | quad
  double eta = 0.5;
  double lyapunov_eps = 1.0 / 32.0;
  double c3 = 0.0, C4 = 0.0, c5 = 0.0;  // quad variant

  std::uint64_t seed = 1;
  long n_traj = 2000;
  double sim_T = 10.0, sim_h = 0.01;
  std::string observable = "q";

  std::string out_dir = "hypolab-out";
  std::set<std::string> suites;  // rates lyapunov operators spectral simulate
};

/** Validates against the schema; errors: bad-config (message carries the path). */
ExperimentConfig parse_config(const json& j, const std::string& source = "<inline>");
ExperimentConfig load_config(const std::string& path);

potentials::PotentialPtr make_potential(const ExperimentConfig& c);

struct SweepRow {
  double gamma = 0.0, lambda = 0.0, delta_star = 0.0;
  double alpha = NAN, beta = NAN, m = NAN, weighted_rate = NAN;
  double gap = NAN;
  double empirical_rate = NAN, empirical_ci_lo = NAN, empirical_ci_hi = NAN;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double lambda_bar = NAN, slope_low = NAN, slope_high = NAN;
  double rho = NAN, eta_eps = NAN;
  json certificates;
  std::map<std::string, bool> verdicts;
  bool all_pass() const;
};

/** Runs the requested suites and writes sweep.csv, sweep.json and summary.txt. */
SweepReport run(const ExperimentConfig& c, bool emit_plot_data = false);

json to_json(const SweepReport& r);
std::string to_csv(const SweepReport& r);

/** Fixed-precision formatting used by every writer (17 significant digits). */
std::string fmt(double v);

// ------------------------------------------------------------------ cache

/** Directory from HYPOLAB_CACHE_DIR, or empty when caching is off. */
std::string cache_dir();
std::optional<json> cache_get(const std::string& key);
void cache_put(const std::string& key, const json& value);

// ------------------------------------------------------------- acceptance

struct CriterionResult {
  int id = 0;
  std::string key;
  bool sampler = false;
  bool skipped = false;
  bool pass = false;
  std::string measured;
  std::string tolerance;
  double seconds = 0.0;
};

struct CriterionInfo {
  int id;
  std::string key;
  bool sampler;
};

const std::vector<CriterionInfo>& acceptance_registry();

struct AcceptanceOptions {
  bool run_sampler = true;
  std::set<int> only;  // empty: all
  bool verbose = false;
};

/** Runs the criteria; each result line is printed as it completes. */
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

std::string format_result(const CriterionResult& r);

}  // namespace hypolab::bench

#endif
