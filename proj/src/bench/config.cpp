#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypolab/bench.hpp"
#include "hypolab/hypo_theory.hpp"

namespace hypolab::bench {

namespace {

[[noreturn]] void bad(const std::string& source, const std::string& what) {
  throw Error("bad-config", source + ": " + what);
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where,
               const std::string& source) {
  if (!j.is_object()) bad(source, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad(source, "unknown key '" + where + "." + it.key() + "'");
}

template <class T>
T get(const json& j, const char* key, T def, const std::string& source) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(source, std::string("wrong type for '") + key + "'");
  }
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ExperimentConfig parse_config(const json& j, const std::string& source) {
  ExperimentConfig c;
  c.source = source;
  only_keys(j, {"potential", "potential_file", "gammas", "gamma_range", "grids", "lyapunov", "sampler", "seed",
                "output", "suites"},
            "config", source);

  if (j.contains("potential")) {
    const json& p = j["potential"];
    if (p.is_string()) {
      c.potential = p.get<std::string>();
    } else {
      only_keys(p, {"name", "params"}, "potential", source);
      c.potential = get<std::string>(p, "name", c.potential, source);
      c.params = get<std::map<std::string, double>>(p, "params", {}, source);
    }
  }
  c.potential_file = get<std::string>(j, "potential_file", "", source);
  if (c.potential_file.empty()) {
    const auto names = potentials::catalog_names();
    if (std::find(names.begin(), names.end(), c.potential) == names.end())
      bad(source, "unknown potential '" + c.potential + "'");
  }

  c.gammas = get<std::vector<double>>(j, "gammas", {}, source);
  if (j.contains("gamma_range")) {
    const json& g = j["gamma_range"];
    only_keys(g, {"lo", "hi", "per_decade"}, "gamma_range", source);
    const double lo = get<double>(g, "lo", 0.0, source), hi = get<double>(g, "hi", 0.0, source);
    const int pd = get<int>(g, "per_decade", 7, source);
    if (!(lo > 0.0 && hi > lo && pd > 0)) bad(source, "gamma_range needs 0 < lo < hi and per_decade > 0");
    const auto extra = hypo_theory::log_grid(lo, hi, pd);
    c.gammas.insert(c.gammas.end(), extra.begin(), extra.end());
  }
  if (c.gammas.empty()) bad(source, "no gamma values");
  for (double g : c.gammas)
    if (!(g > 0.0)) bad(source, "gamma values must be positive");

  if (j.contains("grids")) {
    const json& g = j["grids"];
    only_keys(g, {"growth", "poincare", "kinetic_q", "kinetic_modes", "phase"}, "grids", source);
    c.growth_grid = get<std::string>(g, "growth", "", source);
    c.poincare_grid = get<std::string>(g, "poincare", "", source);
    c.kinetic_q = get<std::string>(g, "kinetic_q", "", source);
    c.kinetic_modes = get<int>(g, "kinetic_modes", c.kinetic_modes, source);
    c.phase_grid = get<std::string>(g, "phase", "", source);
  }
  if (j.contains("lyapunov")) {
    const json& l = j["lyapunov"];
    only_keys(l, {"variant", "eta", "eps", "c3", "C4", "c5"}, "lyapunov", source);
    c.lyapunov_variant = get<std::string>(l, "variant", c.lyapunov_variant, source);
    c.eta = get<double>(l, "eta", c.eta, source);
    c.lyapunov_eps = get<double>(l, "eps", c.lyapunov_eps, source);
    c.c3 = get<double>(l, "c3", 0.0, source);
    c.C4 = get<double>(l, "C4", 0.0, source);
    c.c5 = get<double>(l, "c5", 0.0, source);
    if (c.lyapunov_variant != "exp" && c.lyapunov_variant != "quad")
      bad(source, "lyapunov.variant must be exp or quad");
  }
  if (j.contains("sampler")) {
    const json& s = j["sampler"];
    only_keys(s, {"n_traj", "T", "h", "observable"}, "sampler", source);
    c.n_traj = get<long>(s, "n_traj", c.n_traj, source);
    c.sim_T = get<double>(s, "T", c.sim_T, source);
    c.sim_h = get<double>(s, "h", c.sim_h, source);
    c.observable = get<std::string>(s, "observable", c.observable, source);
  }
  c.seed = get<std::uint64_t>(j, "seed", c.seed, source);
  c.out_dir = get<std::string>(j, "output", c.out_dir, source);

  const std::set<std::string> known = {"rates", "lyapunov", "operators", "spectral", "simulate"};
  if (j.contains("suites")) {
    const json& s = j["suites"];
    if (s.is_string() && s.get<std::string>() == "all") {
      c.suites = known;
    } else {
      for (const auto& name : get<std::vector<std::string>>(j, "suites", {}, source)) {
        if (name == "all") c.suites.insert(known.begin(), known.end());
        else if (known.count(name)) c.suites.insert(name);
        else bad(source, "unknown suite '" + name + "'");
      }
    }
  } else {
    c.suites = {"rates"};
  }
  if (c.growth_grid.empty()) bad(source, "grids.growth is required");
  if ((c.suites.count("spectral") || c.suites.count("operators")) && c.kinetic_q.empty())
    bad(source, "grids.kinetic_q is required for spectral/operators");
  if (c.suites.count("lyapunov") && c.phase_grid.empty()) bad(source, "grids.phase is required for lyapunov");
  if (c.suites.count("lyapunov") && c.lyapunov_variant == "quad" && !(c.c3 > 0.0 && c.c5 > 0.0))
    bad(source, "quad variant needs lyapunov.c3 and lyapunov.c5");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("bad-config", path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("bad-config", path + ": " + e.what());
  }
  return parse_config(j, path);
}

potentials::PotentialPtr make_potential(const ExperimentConfig& c) {
  if (!c.potential_file.empty()) return potentials::from_expression_file(c.potential_file);
  return potentials::catalog(c.potential, c.params);
}

std::string cache_dir() {
  const char* d = std::getenv("HYPOLAB_CACHE_DIR");
  return d ? std::string(d) : std::string();
}

namespace {

std::string cache_file(const std::string& key) {
  std::string name;
  for (char ch : key) name += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' ? ch : '_';
  return (std::filesystem::path(cache_dir()) / (name + ".json")).string();
}

}  // namespace

std::optional<json> cache_get(const std::string& key) {
  if (cache_dir().empty()) return std::nullopt;
  std::ifstream in(cache_file(key));
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void cache_put(const std::string& key, const json& value) {
  if (cache_dir().empty()) return;
  std::filesystem::create_directories(cache_dir());
  std::ofstream(cache_file(key)) << value.dump(2) << '\n';
}

}  // namespace hypolab::bench
