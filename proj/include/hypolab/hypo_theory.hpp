#ifndef HYPOLAB_HYPO_THEORY_HPP
#define HYPOLAB_HYPO_THEORY_HPP

#include <vector>

#include "hypolab/common.hpp"

namespace hypolab::hypo_theory {

struct HypoConstants {
  double eta_eps = 0.0;
  double xi_eps = 0.0;  // eta_eps^2 / 2
};

/** Errors: eps-out-of-window. */
HypoConstants eta_epsilon(double c1, double C2, double eps, double C_eps);

/** \brief Dissipation matrix B of the modified-norm argument and its spectrum. */
struct RateCertificate {
  double gamma = 0.0, delta = 0.0, rho = 0.0, eta_eps = 0.0;
  Eigen::Matrix2d B = Eigen::Matrix2d::Zero();
  double T = 0.0, D = 0.0;
  double Lambda_plus = 0.0, Lambda_minus = 0.0;
  double lambda = 0.0;  // Lambda_minus / 5
  double prefactor = 3.0;
  bool contractive = false;  // D > 0
};

RateCertificate dissipation_matrix(double gamma, double delta, double rho, double eta_eps);

/** min{1, 2 gamma / (1 + ((1+rho)/(4 rho)) (eta_eps + gamma/2)^2)} */
double delta_max(double gamma, double rho, double eta_eps);

struct DeltaOptimum {
  double delta_star = 0.0;
  RateCertificate cert;
  bool unimodal = true;  // false: the pre-scan saw several peaks and grid argmax was used
};

/** Maximises Lambda_minus over (0, delta_max). */
DeltaOptimum optimize_delta(double gamma, double rho, double eta_eps);

struct RateRow {
  double gamma, delta_star, T, D, lambda_minus, lambda, lambda_bar_running;
};

struct RateCurve {
  std::vector<RateRow> rows;
  double slope_low = 0.0, slope_high = 0.0;  // log-log slopes on the end decades
  double lambda_bar = 0.0;                   // min lambda / min(gamma, 1/gamma)
};

/** Needs at least two decades and 7 points in each end decade (insufficient-points). */
RateCurve rate_curve(const std::vector<double>& gammas, double rho, double eta_eps);

/** lo..hi with `per_decade` log-uniform points per decade, endpoints included. */
std::vector<double> log_grid(double lo, double hi, int per_decade);

/** Least-squares slope of log y against log x. */
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct WeightedRateCertificate {
  double lambda = 0.0, alpha = 0.0, beta = 0.0, eta = 0.0;
  double m = 0.0;     // 5 eta lambda / beta
  double rate = 0.0;  // min{lambda (1 - eta), alpha / 2}
  double prefactor = 3.0;
};

/** Errors: parameter-out-of-range. */
WeightedRateCertificate weighted_rate(double lambda, double alpha, double beta, double eta);

}  // namespace hypolab::hypo_theory

#endif
