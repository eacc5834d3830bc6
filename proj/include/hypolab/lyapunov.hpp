#ifndef HYPOLAB_LYAPUNOV_HPP
#define HYPOLAB_LYAPUNOV_HPP

#include <string>
#include <vector>

#include "hypolab/common.hpp"
#include "hypolab/potentials.hpp"

namespace hypolab::lyapunov {

using potentials::GridBox;
using potentials::PotentialSpec;

struct PhasePoint {
  Vec q, p;
};

/** \brief W = H + kappa q.p */
struct QuadCross {
  double kappa = 0.0;
};

/** \brief W = exp(eta (H + kappa p.grad U / (|grad U|^2 + sigma))) */
struct ExpTilted {
  double eta = 0.5, kappa = 0.0, sigma = 1.0;
};

/** A reversed spec is evaluated at (q, -p) and its drift is taken under L^*. */
struct LyapunovSpec {
  enum Variant { Quad, Exp } variant = Quad;
  QuadCross quad;
  ExpTilted exp;
  bool reversed = false;

  static LyapunovSpec quad_cross(double kappa) {
    LyapunovSpec s;
    s.variant = Quad;
    s.quad.kappa = kappa;
    return s;
  }
  static LyapunovSpec exp_tilted(double eta, double kappa, double sigma) {
    LyapunovSpec s;
    s.variant = Exp;
    s.exp = {eta, kappa, sigma};
    return s;
  }
};

LyapunovSpec reverse(LyapunovSpec spec);

double hamiltonian(const PotentialSpec& pot, const PhasePoint& x);

/** W(x). */
double evaluate(const PotentialSpec& pot, const LyapunovSpec& spec, const PhasePoint& x);

/** LW = -(gamma - kappa)|p|^2 - kappa gradU.q - kappa gamma p.q + gamma d. Errors: out-of-domain. */
double quad_cross_drift(const PotentialSpec& pot, double kappa, double gamma, const PhasePoint& x);

/** LW / (eta W) = L Htilde + eta gamma |grad_p Htilde|^2, expanded exactly. Errors: out-of-domain. */
double exp_tilted_drift_ratio(const PotentialSpec& pot, const ExpTilted& spec, double gamma,
                              const PhasePoint& x);

/** Drift of the spec (under L, or L^* when reversed). */
double drift(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma, const PhasePoint& x);

/** \brief Output of the exp-tilted recipe. */
struct ExpParams {
  LyapunovSpec spec;
  double C_eta = 0.0;
  double eps = 0.0, C_eps = 0.0;
};

/** kappa = 2 gamma d, sigma = 2 C_eps / eps, C_eta from 6 d eps + 1/C_eta = (1 - eta)/2.
 *  Errors: eps-too-large-for-eta, parameter-out-of-range. */
ExpParams select_exp_params(const potentials::GrowthCertificate& cert, double gamma, double eta, int dim);

/** Region R_gamma = {|p| > D} u {|grad U| > D max(gamma, 1)}. */
bool in_region(const PotentialSpec& pot, const PhasePoint& x, double D, double gamma);

/** \brief Region search result: smallest D on the ladder with drift ratio LW/(gamma W) <= -c on R_gamma. */
struct RegionChoice {
  double D = 0.0;
  double c = 0.0;  // -max over R_gamma of LW / (gamma W)
  bool found = false;
};

/** Ladder D in {2, 4, ..., 2^max_pow}. Phase grid axes are (q_1..q_d, p_1..p_d). */
RegionChoice select_region(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma,
                           const GridBox& phase_grid, int max_pow = 12);

/** Largest kappa_bar in {8, 4, 2, ...} for which both quadratic-form matrices
 *  are positive definite on a log grid of gamma in [1e-3, 1e3] and
 *  kappa_bar < sqrt(2 c5). */
double select_kappa_bar(double c3, double c5);

/** The 2x2 matrix of the quadratic lower bound for gamma <= 1 (divided by gamma) or gamma >= 1. */
Eigen::Matrix2d kappa_bar_matrix(double kappa_bar, double c3, double c5, double gamma);

struct DriftOptions {
  double region_D = 0.0;        // > 0: collect R_gamma statistics
  bool refine = true;           // repeat on the halved grid for the stability ratio
  bool keep_margin = false;     // store beta - (LW + alpha W) per node
};

/** \brief Grid-certified (alpha, beta) pair. */
struct DriftReport {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  std::string grid;
  Vec argmax_q, argmax_p;
  bool argmax_flagged = false;  // within 2h of the domain boundary
  double beta_unflagged = 0.0;  // sup over unflagged nodes only
  long nodes = 0, flagged_nodes = 0, skipped_nodes = 0;

  // region statistics (region_D > 0)
  double D = 0.0;
  long region_nodes = 0, complement_nodes = 0;
  double region_max_ratio = 0.0;  // max LW / (gamma W) on R_gamma
  double complement_max_ratio = 0.0;
  double M_gamma = 0.0;           // max W on the complement

  double strong_integrability_C = 0.0;  // max W exp(-(1 - delta) H)
  double strong_delta = 0.0;
  double refinement_ratio = 1.0;        // beta(h/2) / beta(h); 1 when both vanish
  std::vector<double> margin;
};

/** Errors: grid-exits-domain (unless skip_outside), bad-grid. */
DriftReport verify_drift(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma,
                         double alpha_target, const GridBox& phase_grid, const DriftOptions& opt = {});

/** Largest alpha whose beta sup is attained away from the flagged nodes and
 *  from the two outer node layers of the box, by bisection to tolerance 1e-3 gamma. */
double alpha_max(const PotentialSpec& pot, const LyapunovSpec& spec, double gamma,
                 const GridBox& phase_grid);

}  // namespace hypolab::lyapunov

#endif
