#ifndef HYPOLAB_SAMPLER_HPP
#define HYPOLAB_SAMPLER_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hypolab/common.hpp"
#include "hypolab/potentials.hpp"

namespace hypolab::sampler {

using potentials::PotentialSpec;

/** \brief Philox-4x32-10 counter-based generator; one independent stream per (seed, stream). */
class Philox {
 public:
  using result_type = std::uint32_t;
  Philox(std::uint64_t seed, std::uint64_t stream);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }
  result_type operator()();
  /** Uniform in (0, 1). */
  double uniform();
  /** Standard normal (Box-Muller). */
  double normal();

 private:
  void refill();
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> out_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct IntegratorConfig {
  std::string scheme = "baoab";  // or "euler-maruyama"
  double h = 0.01;
  double h_min = 1e-7;
  double max_dU = 5.0;  // largest accepted increase of U over one (sub)step
};

struct State {
  Vec q, p;
};

struct StepStats {
  long steps = 0, rejects = 0, halvings = 0;
  int consecutive_rejects = 0;
  bool invalid = false;  // stuck at h_min
};

/** One step; on guard failure the step is split in halves down to h_min and
 *  rejected (state unchanged) below that. Returns false on rejection. */
bool step(State& x, const PotentialSpec& pot, double gamma, const IntegratorConfig& cfg, Philox& rng,
          StepStats& stats);

using Observable = std::function<double(const Vec& q, const Vec& p)>;

struct InitLaw {
  double tilt = 1.0;   // q ~ exp(-U + tilt * phi(q, 0)), p ~ N(0, I)
  int burn_in = 2000;  // overdamped steps for d > 1
};

struct EnsembleConfig {
  double gamma = 1.0;
  IntegratorConfig integ;
  long n_traj = 10000;
  double T = 10.0;
  double dt_sample = 0.05;
  std::uint64_t seed = 1;
  InitLaw init;
  int n_boot = 200;
};

/** \brief Fitted decay of m(t) = E[phi(x_t)] - mu(phi). */
struct DecayEstimate {
  std::string observable;
  double rate = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  double omega = 0.0;  // oscillation frequency of the fitted model
  double r2 = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  long n_traj = 0, invalid = 0, rejects = 0;
  double h = 0.0;
  double mu_phi = 0.0;
  std::vector<double> t, mean, stderr_;
};

struct DecayFit {
  double rate = 0.0, omega = 0.0, a = 0.0, b = 0.0, r2 = 0.0;
};

/** Least squares of exp(-r t)(a cos(w t) + b sin(w t)) by variable projection. */
DecayFit fit_damped_exponential(const std::vector<double>& t, const std::vector<double>& m);

/** Errors: signal-below-noise. `mu_phi` NaN: computed by estimate_mu_average. */
DecayEstimate simulate_ensemble(const PotentialSpec& pot, const EnsembleConfig& cfg, const Observable& phi,
                                const std::string& id, double mu_phi);

struct MuEstimate {
  double value = 0.0, error = 0.0;
  double quadrature = 0.0, quadrature_error = 0.0;
  double longrun = 0.0, longrun_error = 0.0;
  bool disagreement = false;
};

struct MuOptions {
  std::string method = "quadrature";  // quadrature | longrun | both
  potentials::GridBox box;            // quadrature truncation (d <= 2)
  double gamma = 1.0, T = 2e4, h = 0.01;
  std::uint64_t seed = 5;
};

MuEstimate estimate_mu_average(const PotentialSpec& pot, const Observable& phi, const MuOptions& opt);

struct FKConfig {
  double h = 1e-3;
  double horizon = 20.0;
  long n_paths = 4000;
  std::uint64_t seed = 3;
  double h_min = 1e-8;
  double max_dU = 5.0;
};

struct FKEstimate {
  std::vector<double> psi, stderr_;
  long rejects = 0;
  bool explosion = false;
};

/** Resolvent (1 - L_OD)^{-1} phi at the given points from overdamped paths. */
FKEstimate feynman_kac_resolvent(const PotentialSpec& pot, const std::function<double(const Vec&)>& phi,
                                 const std::vector<Vec>& qs, const FKConfig& cfg);

}  // namespace hypolab::sampler

#endif
