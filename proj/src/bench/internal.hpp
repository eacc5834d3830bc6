#ifndef HYPOLAB_BENCH_INTERNAL_HPP
#define HYPOLAB_BENCH_INTERNAL_HPP

#include "hypolab/bench.hpp"
#include "hypolab/generator_lab.hpp"
#include "hypolab/potentials.hpp"

namespace hypolab::bench::detail {

std::string grid_key(const potentials::GridBox& g);
std::string potential_key(const potentials::PotentialSpec& pot);

json to_json(const potentials::GrowthCertificate& c);
potentials::GrowthCertificate growth_from_json(const json& j, const potentials::GridBox& region);

/** Growth constants through the on-disk cache. */
potentials::GrowthCertificate growth(const potentials::PotentialSpec& pot, const potentials::GridBox& grid,
                                     const potentials::EpsPolicy& policy);

/** Poincare constant on a q-grid through the on-disk cache. */
double poincare(const potentials::PotentialPtr& pot, const potentials::GridBox& grid, bool mask);

}  // namespace hypolab::bench::detail

#endif
