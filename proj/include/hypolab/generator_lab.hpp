#ifndef HYPOLAB_GENERATOR_LAB_HPP
#define HYPOLAB_GENERATOR_LAB_HPP

// Measure-weighted discretisations of L_OD (d = 1, 2) and of the kinetic
// generator L (d = 1).
//
// The kinetic space is spanned by orthonormal Hermite functions psi_n(p) of the
// Gaussian momentum marginal times grid functions of q. Even modes live on the
// q-nodes and odd modes on the q-edges (cell midpoints), so that
//   L_H = a^+ (x) G - a (x) G^*,   L_OU = -n,
// with G the forward difference between the two staggered q-grids and G^* its
// exact weighted adjoint. On the grid this makes L_H exactly skew, L_OU exactly
// symmetric, Pi L_H Pi = 0, Pi L_H^2 Pi = L_OD (the divergence-form operator with
// harmonic-mean edge weights) and R L R = L^* with (R phi)_n = (-1)^n phi_n.

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Sparse>

#include "hypolab/common.hpp"
#include "hypolab/potentials.hpp"

namespace hypolab::generator_lab {

using SpMat = Eigen::SparseMatrix<double>;
using potentials::PotentialPtr;

// ---------------------------------------------------------------- overdamped

/** \brief -grad^* grad on a tensor grid with mu_OD harmonic-mean edge weights. */
class OverdampedOperator {
 public:
  /** Nodes outside the domain raise grid-exits-domain unless `mask_domain`, in
   *  which case they are dropped (no-flux across the hole). */
  OverdampedOperator(PotentialPtr pot, potentials::GridBox box, bool mask_domain = false);

  int size() const { return static_cast<int>(w_.size()); }
  int dim() const { return box_.dim(); }
  const potentials::GridBox& box() const { return box_; }
  const PotentialPtr& potential() const { return pot_; }
  bool masked() const { return mask_; }

  /** mu_OD quadrature weights of the active nodes, summing to 1. */
  const Vec& weights() const { return w_; }
  /** Coordinates of active node k (columns). */
  const Mat& nodes() const { return x_; }
  const Vec& U() const { return U_; }
  /** Flat box index of active node k, and -1 for dropped nodes in the reverse map. */
  const std::vector<long>& flat_index() const { return flat_; }
  const std::vector<int>& active_index() const { return active_; }

  const SpMat& matrix() const { return L_; }
  /** W^{1/2} (-L_OD) W^{-1/2}, symmetric positive semidefinite. */
  const SpMat& symmetric_form() const { return S_; }

  Vec apply(const Vec& f) const { return L_ * f; }
  double inner(const Vec& a, const Vec& b) const { return (w_.array() * a.array() * b.array()).sum(); }
  double norm2(const Vec& a) const { return inner(a, a); }
  double mean(const Vec& a) const { return w_.dot(a); }
  /** Dirichlet form sum_edges c_e |grad f|^2 = <-L_OD f, f>. */
  double dirichlet(const Vec& f) const { return -inner(L_ * f, f); }

  /** psi with (1 - L_OD) psi = phi (cached sparse Cholesky). */
  Vec resolvent(const Vec& phi) const;

  /** Samples f at the active nodes. */
  Vec sample(const std::function<double(const Vec&)>& f) const;

  /** Squared Frobenius norm of the central-difference Hessian of f, integrated
   *  against mu_OD over nodes that carry a full stencil (renormalised). */
  double hessian_norm2(const Vec& f) const;

  /** Maximum |(W S W^{-1}) - (-L)| symmetry defect, a consistency diagnostic. */
  double symmetry_defect() const;

 private:
  PotentialPtr pot_;
  potentials::GridBox box_;
  bool mask_;
  Vec w_, U_;
  Mat x_;
  std::vector<long> flat_;
  std::vector<int> active_;
  SpMat L_, S_;
  struct Solver;
  std::shared_ptr<Solver> solver_;
};

/** Builds the operator; errors: grid-exits-domain. */
OverdampedOperator discretize_overdamped(PotentialPtr pot, const potentials::GridBox& box,
                                         bool mask_domain = false);

struct PoincareReport {
  double rho = 0.0;       // on the given grid
  double rho_half = 0.0;  // on the grid with every spacing halved (0 if not requested)
  double residual = 0.0;
  int iterations = 0;
};

/** Smallest non-zero eigenvalue of -L_OD by shift-invert subspace iteration
 *  with constants deflated. Errors: eigensolver-nonconverged. */
PoincareReport poincare_constant(const OverdampedOperator& op, bool with_refinement = true);

// ------------------------------------------------------------------ kinetic

/** \brief Phase grid for d = 1: q-axis, Hermite mode count and the p-quadrature
 *  used for nodal evaluation. */
struct PhaseGrid {
  Axis q{-6.0, 6.0, 385};
  int n_modes = 32;
  std::string p_rule = "gauss-hermite";  // or "uniform" (|p| <= p_max)
  int n_p_nodes = 0;                     // 0: max(2 n_modes, 48)
  double p_max = 8.0;
  std::vector<double> p_nodes;           // explicit nodes override the rule
  std::vector<double> p_weights;         // with explicit nodes; normalised internally
};

/** Probabilists' Gauss-Hermite rule with weights summing to 1. */
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

/** psi_0..psi_{n-1}(p), orthonormal for the standard Gaussian. */
Vec hermite_functions(int n, double p);

class KineticOperator {
 public:
  /** Errors: asymmetric-p-grid, grid-exits-domain, bad-grid (d != 1). */
  KineticOperator(PotentialPtr pot, const PhaseGrid& grid, double gamma);

  int size() const { return n_; }
  int n_modes() const { return nm_; }
  int nq() const { return nq_; }
  double gamma() const { return gamma_; }
  const PhaseGrid& grid() const { return grid_; }
  const PotentialPtr& potential() const { return od_->potential(); }
  int offset(int mode) const { return off_[mode]; }
  int block_size(int mode) const { return mode % 2 == 0 ? nq_ : nq_ - 1; }
  /** q-coordinate of entry k of block `mode` (node for even, edge midpoint for odd). */
  double position(int mode, int k) const;

  /** Inner-product weights: mu_OD node weights on even blocks, edge weights on odd. */
  const Vec& mass() const { return m_; }
  const SpMat& L() const { return L_; }
  const SpMat& L_star() const { return Lstar_; }
  const SpMat& L_H() const { return LH_; }
  const SpMat& L_OU() const { return LOU_; }
  /** M^{-1} A^T M, the mu-adjoint of a matrix on this space. */
  SpMat mu_adjoint(const SpMat& A) const;

  const OverdampedOperator& overdamped() const { return *od_; }

  double inner(const Vec& a, const Vec& b) const { return (m_.array() * a.array() * b.array()).sum(); }
  double norm2(const Vec& a) const { return inner(a, a); }
  double mean(const Vec& a) const { return inner(a, one_); }
  const Vec& one() const { return one_; }

  Vec pi(const Vec& phi) const;
  Vec reverse(const Vec& phi) const;
  /** Embeds a function of q sampled at the nodes. */
  Vec from_q(const Vec& f) const;
  Vec q_part(const Vec& phi) const { return phi.segment(0, nq_); }
  /** Projects phi(q, p) onto the modes (p-quadrature at each node/edge). */
  Vec project(const std::function<double(double, double)>& phi) const;
  /** Value of the grid function at (q-node i, p). Odd modes are averaged from edges. */
  double evaluate(const Vec& phi, int i, double p) const;

  /** A phi = (1 - L_OD)^{-1} Pi L_H phi, returned embedded as a q-function. */
  Vec apply_A(const Vec& phi) const;
  /** sum_n n |phi_n|^2 = |grad_p phi|^2 = -<L_OU phi, phi>. */
  double grad_p_norm2(const Vec& phi) const;
  /** |phi|^2 + delta <A phi, phi>. */
  double modified_norm2(const Vec& phi, double delta) const;
  /** int V phi^2 d mu using p-quadrature for the weight; exact for V = 1. */
  double weighted_norm2(const Vec& phi, const std::function<double(double, double)>& V) const;

  const std::vector<double>& p_nodes() const { return pn_; }
  const std::vector<double>& p_weights() const { return pw_; }

 private:
  std::shared_ptr<OverdampedOperator> od_;
  PhaseGrid grid_;
  double gamma_;
  int nq_, nm_, n_;
  std::vector<int> off_;
  Vec m_, one_, c_;
  SpMat L_, Lstar_, LH_, LOU_, Dstar_;
  std::vector<double> pn_, pw_;
};

/** \brief Cached p-quadrature matrices for int V phi^2 d mu. */
class WeightedNorm {
 public:
  WeightedNorm(const KineticOperator& op, const std::function<double(double, double)>& V);
  double norm2(const Vec& phi) const;

 private:
  const KineticOperator* op_;
  std::vector<Mat> node_, edge_;  // V_nm at nodes (all modes) and at edges (odd modes)
};

KineticOperator discretize_kinetic(PotentialPtr pot, const PhaseGrid& grid, double gamma);

// ----------------------------------------------------------------- spectra

struct GapOptions {
  double shift = 0.1;  // real shift right of the spectrum
  int krylov = 60;
  int restarts = 30;
  double tol = 1e-10;  // relative eigen-residual
  unsigned seed = 7;
};

struct GapResult {
  double gap = 0.0;                     // -Re of the rightmost non-zero eigenvalue
  std::complex<double> leading;         // that eigenvalue
  std::complex<double> partner;         // conjugate, or the next Ritz value if real
  double residual = 0.0;
  int iterations = 0;
};

/** Shift-invert Arnoldi on the mu-mean-zero subspace; `mass` and `one`
 *  define the deflated constant. Errors: nonconvergence. */
GapResult spectral_gap(const SpMat& L, const Vec& mass, const Vec& one, const GapOptions& opt = {});
GapResult spectral_gap(const KineticOperator& op, bool adjoint = false, const GapOptions& opt = {});

// --------------------------------------------------------------- semigroup

/** exp(t A) V by scaled Taylor series with term truncation at `tol`. */
Mat expmv(const SpMat& A, const Mat& V, double t, double tol = 1e-8);

/** \brief Applies exp(dt L); dense matrix exponential for small systems. */
class Propagator {
 public:
  explicit Propagator(const SpMat& L, int dense_limit = 2500);
  Mat advance(const Mat& V, double dt);

 private:
  const SpMat& L_;
  bool dense_;
  std::map<double, Mat> cache_;
};

struct NormSelector {
  enum Kind { Plain, Modified, Weighted } kind = Plain;
  double delta = 0.0;                               // Modified
  std::function<double(double, double)> weight;     // Weighted
};

struct DecayCurve {
  std::vector<double> t;
  std::vector<double> norm;  // selected norm (not squared)
  double fitted_rate = 0.0;  // log-linear fit on the tail half
};

/** Propagates each phi0 under exp(t L) (or L^* when `adjoint`).
 *  Errors: propagation-unstable. */
std::vector<DecayCurve> semigroup_decay(const KineticOperator& op, const std::vector<Vec>& phi0,
                                        const std::vector<double>& times, const NormSelector& norm,
                                        bool adjoint = false);

double tail_rate(const std::vector<double>& t, const std::vector<double>& y);

// ----------------------------------------------------------- test functions

/** Band-limited random function: Chebyshev polynomials of degree <= deg in the
 *  rescaled q-coordinate times Hermite modes <= max_mode. */
Vec random_phase_function(const KineticOperator& op, std::mt19937_64& rng, int max_mode = 3,
                          int deg = 4, bool mean_zero = true);
Vec random_q_function(const OverdampedOperator& op, std::mt19937_64& rng, int deg = 4,
                      bool mean_zero = false);

// ------------------------------------------------------------ inequalities

struct EllipticReport {
  std::vector<double> ratios;  // |Hess psi|^2 / |phi|^2
  double max_ratio = 0.0;
  double bound = 0.0;  // xi_eps
  bool pass = false;   // max_ratio <= xi_eps * 1.05
};

EllipticReport check_elliptic_regularity(const OverdampedOperator& op, const std::vector<Vec>& phis,
                                         double xi_eps, double tolerance = 0.05);

/** \brief Result of one inequality over the random family. */
struct InequalityStat {
  std::string name;
  double max_ratio = 0.0;  // max of lhs / rhs (rhs without tolerance)
  int violations = 0;      // lhs > rhs * (1 + tolerance)
  double tolerance = 0.0;
};

struct OpsReport {
  std::vector<InequalityStat> stats;
  double equality_ratio_p = -1.0;     // |A p| / (|(1-Pi) p| / 2); -1 when not evaluated
  double AL_OU_identity_error = 0.0;  // max |A L_OU phi + A phi| / |A phi|
  double rho = 0.0, eta_eps = 0.0;
  bool pass = false;
};

/** Operator-A suite over `n_phi` seeded random mean-zero functions. */
OpsReport verify_operator_suite(const KineticOperator& op, double rho, double eta_eps, int n_phi,
                                unsigned seed, double tolerance = 0.05);

}  // namespace hypolab::generator_lab

#endif
