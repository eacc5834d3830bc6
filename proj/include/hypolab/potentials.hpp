#ifndef HYPOLAB_POTENTIALS_HPP
#define HYPOLAB_POTENTIALS_HPP

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hypolab/common.hpp"

namespace hypolab::potentials {

/** \brief Excluded locus of the domain, e.g. the origin for a pair potential. */
struct Singularity {
  std::string kind;  // "point" | "hyperplane"
  Vec location;      // point, or normal vector for a hyperplane through the origin
};

/** \brief Potential U >= 0 with exact gradient and Hessian on its open domain. */
class PotentialSpec {
 public:
  PotentialSpec(std::string id, int dim) : id_(std::move(id)), dim_(dim) {}
  virtual ~PotentialSpec() = default;

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }

  /** +infinity outside the domain. */
  virtual double U(const Vec& q) const = 0;
  virtual Vec grad(const Vec& q) const = 0;
  virtual Mat hess(const Vec& q) const = 0;
  virtual bool in_domain(const Vec& q) const = 0;
  /** A domain point near the global minimum; used to seed samplers. */
  virtual Vec reference_point() const { return Vec::Zero(dim_); }

  const std::vector<Singularity>& singularities() const { return sing_; }
  const std::map<std::string, double>& params() const { return params_; }

  double laplacian(const Vec& q) const { return hess(q).trace(); }
  /** Operator 2-norm of the Hessian. */
  double hess_opnorm(const Vec& q) const;

  // d = 1 shorthands
  double U1(double q) const { return U(Vec::Constant(1, q)); }
  double dU1(double q) const { return grad(Vec::Constant(1, q))[0]; }
  double d2U1(double q) const { return hess(Vec::Constant(1, q))(0, 0); }

 protected:
  std::vector<Singularity> sing_;
  std::map<std::string, double> params_;

 private:
  std::string id_;
  int dim_;
};

using PotentialPtr = std::shared_ptr<const PotentialSpec>;

std::vector<std::string> catalog_names();

/** Catalog entry by name; errors with "unknown-name". Recognised params:
 *  harmonic/quartic-well: dim; lennard-jones-pair: dim, eps, sigma, k;
 *  coulomb-pair-confined: dim, charge, k. */
PotentialPtr catalog(const std::string& name, const std::map<std::string, double>& params = {});

/** Closed-form potential built from callables. */
struct FunctionPotential {
  std::string id;
  int dim = 1;
  std::function<double(const Vec&)> U;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  std::function<bool(const Vec&)> in_domain;
  Vec reference;
  std::vector<Singularity> singularities;
};
PotentialPtr make_potential(FunctionPotential f);

/** Expression potential: U(q) - shift with AD derivatives. Each entry of
 *  `domain` is an expression that must be > 0 inside the domain. */
PotentialPtr from_expression(const std::string& id, int dim, const std::string& U_expr,
                             const std::vector<std::string>& domain = {}, double shift = 0.0,
                             const Vec& reference = Vec());

/** JSON file {"name", "dim", "U", "domain": [...], "shift", "reference": [...]}. */
PotentialPtr from_expression_file(const std::string& path);

/** \brief Tensor-product box of uniform axes. */
struct GridBox {
  std::vector<Axis> axes;
  int dim() const { return static_cast<int>(axes.size()); }
  long size() const;
  Vec node(long flat) const;
  /** Same box, every spacing halved. */
  GridBox refined() const;
};

/** "lo:hi:n" repeated with ',' between dimensions. */
GridBox parse_box(const std::string& spec);

struct EpsPolicy {
  double eps = 0.0;   // > 0: explicit epsilon; otherwise (1-c1)^2/8
  double c1 = 0.0;    // > 0: declared c1 instead of the ladder search
};

/** \brief Growth constants certified on a grid region. */
struct GrowthCertificate {
  double c1 = 0.0, C2 = 0.0, eps = 0.0, C_eps = 0.0;
  double rho = 0.0;  // 0 until delegated to generator_lab
  GridBox region;
  std::map<std::string, std::string> provenance;  // analytic | grid-sup | delegated-eigensolve
  double ratio_C2 = 1.0, ratio_C_eps = 1.0;       // fine/coarse sup ratios
};

/** Ladder search for c1 in {0.1..0.9}, grid sups with two-level refinement.
 *  The reported constant is the fine sup plus the last refinement increment.
 *  Errors: grid-exits-domain, non-stabilizing-sup, eps-out-of-window. */
GrowthCertificate estimate_growth_constants(const PotentialSpec& pot, const GridBox& grid,
                                            const EpsPolicy& policy = {});

/** Re-evaluates the certificate inequalities at `n` uniform random points of
 *  the region; returns the number of violations. */
int certificate_violations(const PotentialSpec& pot, const GrowthCertificate& cert, int n,
                           unsigned seed);

/** Sup of opnorm(Hess U) - eps |grad U|^2 over a grid (no clamping). */
double hessian_excess_sup(const PotentialSpec& pot, const GridBox& grid, double eps);

struct QuadratureSpec {
  GridBox box;         // truncation box; only lo/hi are used
  double tol = 1e-3;   // relative tail tolerance
};

struct MomentValue {
  double r = 0.0;
  double value = 0.0;       // on the doubled box
  double tail_bound = 0.0;  // |value(doubled) - value(box)|
};

struct MomentsReport {
  std::vector<MomentValue> grad_moments;  // int |grad U|^r d mu_OD
  MomentValue exp_quarter, exp_half;      // int exp(-delta U) dq, r holds delta
};

/** Adaptive Gauss-Kronrod; d in {1,2}. Errors: quadrature-nonconvergent. */
MomentsReport check_gradient_moments(const PotentialSpec& pot, const std::vector<double>& r_list,
                                     const QuadratureSpec& quad);

}  // namespace hypolab::potentials

#endif
