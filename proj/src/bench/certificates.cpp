#include <sstream>

#include "internal.hpp"

namespace hypolab::bench::detail {

std::string grid_key(const potentials::GridBox& g) {
  std::ostringstream os;
  for (const auto& a : g.axes) os << fmt(a.lo) << ':' << fmt(a.hi) << ':' << a.n << ';';
  return os.str();
}

std::string potential_key(const potentials::PotentialSpec& pot) {
  std::ostringstream os;
  os << pot.id() << '-' << pot.dim();
  for (const auto& [k, v] : pot.params()) os << '-' << k << '=' << fmt(v);
  return os.str();
}

json to_json(const potentials::GrowthCertificate& c) {
  return json{{"c1", c.c1},         {"C2", c.C2},
              {"eps", c.eps},       {"C_eps", c.C_eps},
              {"rho", c.rho},       {"ratio_C2", c.ratio_C2},
              {"ratio_C_eps", c.ratio_C_eps}, {"region", grid_key(c.region)},
              {"provenance", c.provenance}};
}

potentials::GrowthCertificate growth_from_json(const json& j, const potentials::GridBox& region) {
  potentials::GrowthCertificate c;
  c.c1 = j.at("c1");
  c.C2 = j.at("C2");
  c.eps = j.at("eps");
  c.C_eps = j.at("C_eps");
  c.rho = j.at("rho");
  c.ratio_C2 = j.at("ratio_C2");
  c.ratio_C_eps = j.at("ratio_C_eps");
  c.provenance = j.at("provenance").get<std::map<std::string, std::string>>();
  c.region = region;
  return c;
}

potentials::GrowthCertificate growth(const potentials::PotentialSpec& pot, const potentials::GridBox& grid,
                                     const potentials::EpsPolicy& policy) {
  const std::string key =
      "growth-" + potential_key(pot) + "-" + grid_key(grid) + "-" + fmt(policy.eps) + "-" + fmt(policy.c1);
  if (auto j = cache_get(key)) return growth_from_json(*j, grid);
  auto c = potentials::estimate_growth_constants(pot, grid, policy);
  cache_put(key, to_json(c));
  return c;
}

double poincare(const potentials::PotentialPtr& pot, const potentials::GridBox& grid, bool mask) {
  const std::string key = "rho-" + potential_key(*pot) + "-" + grid_key(grid) + (mask ? "-mask" : "");
  if (auto j = cache_get(key)) return j->at("rho").get<double>();
  const auto op = generator_lab::discretize_overdamped(pot, grid, mask);
  const double rho = generator_lab::poincare_constant(op, false).rho;
  cache_put(key, json{{"rho", rho}});
  return rho;
}

}  // namespace hypolab::bench::detail
