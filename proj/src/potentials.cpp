#include "hypolab/potentials.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "hypolab/expr.hpp"

namespace hypolab {

Axis parse_axis(const std::string& spec) {
  Axis a;
  char c1 = 0, c2 = 0;
  std::istringstream is(spec);
  if (!(is >> a.lo >> c1 >> a.hi >> c2 >> a.n) || c1 != ':' || c2 != ':' || a.n < 2 ||
      !(a.hi > a.lo))
    throw Error("bad-grid", "expected lo:hi:n, got '" + spec + "'");
  return a;
}

}  // namespace hypolab

namespace hypolab::potentials {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double param(const std::map<std::string, double>& p, const std::string& k, double def) {
  auto it = p.find(k);
  return it == p.end() ? def : it->second;
}

class Harmonic : public PotentialSpec {
 public:
  explicit Harmonic(int d) : PotentialSpec("harmonic", d) { params_["dim"] = d; }
  double U(const Vec& q) const override { return 0.5 * q.squaredNorm(); }
  Vec grad(const Vec& q) const override { return q; }
  Mat hess(const Vec& q) const override { return Mat::Identity(q.size(), q.size()); }
  bool in_domain(const Vec& q) const override { return q.allFinite(); }
};

// sum_i (q_i^2 - 1)^2 / 4
class QuarticWell : public PotentialSpec {
 public:
  explicit QuarticWell(int d) : PotentialSpec("quartic-well", d) { params_["dim"] = d; }
  double U(const Vec& q) const override {
    double s = 0.0;
    for (int i = 0; i < q.size(); ++i) s += 0.25 * std::pow(q[i] * q[i] - 1.0, 2);
    return s;
  }
  Vec grad(const Vec& q) const override {
    Vec g(q.size());
    for (int i = 0; i < q.size(); ++i) g[i] = q[i] * (q[i] * q[i] - 1.0);
    return g;
  }
  Mat hess(const Vec& q) const override {
    Mat H = Mat::Zero(q.size(), q.size());
    for (int i = 0; i < q.size(); ++i) H(i, i) = 3.0 * q[i] * q[i] - 1.0;
    return H;
  }
  bool in_domain(const Vec& q) const override { return q.allFinite(); }
  Vec reference_point() const override { return Vec::Ones(dim()); }
};

// 1/q + q^2 - u0 on (0, inf), u0 = 3 * 2^(-2/3) at q = 2^(-1/3)
class Singular1D : public PotentialSpec {
 public:
  Singular1D() : PotentialSpec("singular-1d", 1) {
    sing_.push_back({"point", Vec::Zero(1)});
    params_["u0"] = u0;
  }
  static constexpr double u0 = 1.8898815748423097;  // 3 / 2^(2/3)
  double U(const Vec& q) const override {
    return in_domain(q) ? 1.0 / q[0] + q[0] * q[0] - u0 : kInf;
  }
  Vec grad(const Vec& q) const override {
    return Vec::Constant(1, -1.0 / (q[0] * q[0]) + 2.0 * q[0]);
  }
  Mat hess(const Vec& q) const override {
    return Mat::Constant(1, 1, 2.0 / (q[0] * q[0] * q[0]) + 2.0);
  }
  bool in_domain(const Vec& q) const override { return std::isfinite(q[0]) && q[0] > 0.0; }
  Vec reference_point() const override { return Vec::Constant(1, std::pow(2.0, -1.0 / 3.0)); }
};

// U(q) = f(|q|) - shift with f given with two derivatives.
class Radial : public PotentialSpec {
 public:
  using F = std::function<void(double, double&, double&, double&)>;
  Radial(std::string id, int d, F f, double shift, double rstar, std::map<std::string, double> p)
      : PotentialSpec(std::move(id), d), f_(std::move(f)), shift_(shift), rstar_(rstar) {
    sing_.push_back({"point", Vec::Zero(d)});
    params_ = std::move(p);
  }
  double U(const Vec& q) const override {
    if (!in_domain(q)) return kInf;
    double f, f1, f2;
    f_(q.norm(), f, f1, f2);
    return f - shift_;
  }
  Vec grad(const Vec& q) const override {
    double r = q.norm(), f, f1, f2;
    f_(r, f, f1, f2);
    return (f1 / r) * q;
  }
  Mat hess(const Vec& q) const override {
    double r = q.norm(), f, f1, f2;
    f_(r, f, f1, f2);
    Vec u = q / r;
    Mat P = u * u.transpose();
    return f2 * P + (f1 / r) * (Mat::Identity(q.size(), q.size()) - P);
  }
  bool in_domain(const Vec& q) const override { return q.allFinite() && q.norm() > 0.0; }
  Vec reference_point() const override {
    Vec v = Vec::Zero(dim());
    v[0] = rstar_;
    return v;
  }

 private:
  F f_;
  double shift_;
  double rstar_;
};

PotentialPtr make_lj(const std::map<std::string, double>& p) {
  const int d = static_cast<int>(param(p, "dim", 2));
  const double e = param(p, "eps", 1.0), s = param(p, "sigma", 1.0), k = param(p, "k", 1.0);
  Radial::F f = [e, s, k](double r, double& v, double& v1, double& v2) {
    double sr6 = std::pow(s / r, 6), sr12 = sr6 * sr6;
    v = 4.0 * e * (sr12 - sr6) + 0.5 * k * r * r;
    v1 = 4.0 * e * (-12.0 * sr12 + 6.0 * sr6) / r + k * r;
    v2 = 4.0 * e * (156.0 * sr12 - 42.0 * sr6) / (r * r) + k;
  };
  auto fr = [&f](double r) {
    double v, a, b;
    f(r, v, a, b);
    return v;
  };
  auto [rmin, fmin] = boost::math::tools::brent_find_minima(fr, 0.5 * s, 5.0 * s, 60);
  return std::make_shared<Radial>(
      "lennard-jones-pair", d, f, fmin, rmin,
      std::map<std::string, double>{{"dim", d}, {"eps", e}, {"sigma", s}, {"k", k}, {"shift", fmin}});
}

PotentialPtr make_coulomb(const std::map<std::string, double>& p) {
  const int d = static_cast<int>(param(p, "dim", 3));
  const double Z = param(p, "charge", 1.0), k = param(p, "k", 1.0);
  Radial::F f = [Z, k](double r, double& v, double& v1, double& v2) {
    v = Z / r + 0.5 * k * r * r;
    v1 = -Z / (r * r) + k * r;
    v2 = 2.0 * Z / (r * r * r) + k;
  };
  const double rstar = std::cbrt(Z / k);
  const double fmin = 1.5 * std::cbrt(Z * Z * k);
  return std::make_shared<Radial>(
      "coulomb-pair-confined", d, f, fmin, rstar,
      std::map<std::string, double>{{"dim", d}, {"charge", Z}, {"k", k}, {"shift", fmin}});
}

class Functional : public PotentialSpec {
 public:
  explicit Functional(FunctionPotential f) : PotentialSpec(f.id, f.dim), f_(std::move(f)) {
    sing_ = f_.singularities;
    if (f_.reference.size() != dim()) f_.reference = Vec::Zero(dim());
  }
  double U(const Vec& q) const override { return in_domain(q) ? f_.U(q) : kInf; }
  Vec grad(const Vec& q) const override { return f_.grad(q); }
  Mat hess(const Vec& q) const override { return f_.hess(q); }
  bool in_domain(const Vec& q) const override {
    return q.allFinite() && (!f_.in_domain || f_.in_domain(q));
  }
  Vec reference_point() const override { return f_.reference; }

 private:
  FunctionPotential f_;
};

}  // namespace

double PotentialSpec::hess_opnorm(const Vec& q) const {
  Mat H = hess(q);
  if (H.rows() == 1) return std::abs(H(0, 0));
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<std::string> catalog_names() {
  return {"harmonic", "quartic-well", "singular-1d", "lennard-jones-pair", "coulomb-pair-confined"};
}

PotentialPtr catalog(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "harmonic") return std::make_shared<Harmonic>(static_cast<int>(param(params, "dim", 1)));
  if (name == "quartic-well")
    return std::make_shared<QuarticWell>(static_cast<int>(param(params, "dim", 1)));
  if (name == "singular-1d") return std::make_shared<Singular1D>();
  if (name == "lennard-jones-pair") return make_lj(params);
  if (name == "coulomb-pair-confined") return make_coulomb(params);
  throw Error("unknown-name", "no catalog potential named '" + name + "'");
}

PotentialPtr make_potential(FunctionPotential f) { return std::make_shared<Functional>(std::move(f)); }

PotentialPtr from_expression(const std::string& id, int dim, const std::string& U_expr,
                             const std::vector<std::string>& domain, double shift,
                             const Vec& reference) {
  auto U = std::make_shared<expr::Expression>(U_expr, expr::q_names(dim));
  std::vector<std::shared_ptr<expr::Expression>> dom;
  for (const auto& s : domain) dom.push_back(std::make_shared<expr::Expression>(s, expr::q_names(dim)));
  FunctionPotential f;
  f.id = id;
  f.dim = dim;
  f.U = [U, shift](const Vec& q) { return U->value(q) - shift; };
  f.grad = [U](const Vec& q) { return U->jet(q).g; };
  f.hess = [U](const Vec& q) { return U->jet(q).H; };
  if (!dom.empty())
    f.in_domain = [dom](const Vec& q) {
      for (const auto& e : dom)
        if (!(e->value(q) > 0.0)) return false;
      return true;
    };
  f.reference = reference;
  return make_potential(std::move(f));
}

PotentialPtr from_expression_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("bad-config", path + ": " + e.what());
  }
  const int dim = j.value("dim", 1);
  std::vector<std::string> domain = j.value("domain", std::vector<std::string>{});
  Vec ref;
  if (j.contains("reference")) {
    auto r = j["reference"].get<std::vector<double>>();
    ref = Eigen::Map<Vec>(r.data(), static_cast<long>(r.size()));
  }
  return from_expression(j.value("name", std::string("custom")), dim, j.at("U").get<std::string>(),
                         domain, j.value("shift", 0.0), ref);
}

long GridBox::size() const {
  long s = 1;
  for (const auto& a : axes) s *= a.n;
  return s;
}

Vec GridBox::node(long flat) const {
  Vec q(dim());
  for (int k = 0; k < dim(); ++k) {
    q[k] = axes[k].at(static_cast<int>(flat % axes[k].n));
    flat /= axes[k].n;
  }
  return q;
}

GridBox GridBox::refined() const {
  GridBox g = *this;
  for (auto& a : g.axes) a.n = 2 * a.n - 1;
  return g;
}

GridBox parse_box(const std::string& spec) {
  GridBox g;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) g.axes.push_back(parse_axis(part));
  if (g.axes.empty()) throw Error("bad-grid", "empty grid spec");
  return g;
}

namespace {

struct NodeData {
  double lap, g2, opn;
};

std::vector<NodeData> scan(const PotentialSpec& pot, const GridBox& grid) {
  if (grid.dim() != pot.dim())
    throw Error("bad-grid", "grid dimension does not match potential dimension");
  std::vector<NodeData> out(grid.size());
  for (long i = 0; i < grid.size(); ++i) {
    Vec q = grid.node(i);
    if (!pot.in_domain(q))
      throw Error("grid-exits-domain", "grid node outside the domain of " + pot.id());
    Mat H = pot.hess(q);
    double opn;
    if (H.rows() == 1) {
      opn = std::abs(H(0, 0));
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
      opn = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    out[i] = {H.trace(), pot.grad(q).squaredNorm(), opn};
  }
  return out;
}

double sup_of(const std::vector<NodeData>& d, double a, bool lap) {
  double s = -kInf;
  for (const auto& n : d) s = std::max(s, (lap ? n.lap : n.opn) - a * n.g2);
  return s;
}

// fine/coarse with both clamped at 0; 1 when both vanish
double ratio_of(double coarse, double fine) {
  coarse = std::max(coarse, 0.0);
  fine = std::max(fine, 0.0);
  if (fine == 0.0) return 1.0;
  if (coarse == 0.0) return kInf;
  return fine / coarse;
}

}  // namespace

GrowthCertificate estimate_growth_constants(const PotentialSpec& pot, const GridBox& grid,
                                            const EpsPolicy& policy) {
  const auto coarse = scan(pot, grid);
  const auto fine = scan(pot, grid.refined());
  GrowthCertificate c;
  c.region = grid;

  std::vector<double> ladder;
  if (policy.c1 > 0.0) {
    ladder = {policy.c1};
    c.provenance["c1"] = "analytic";
  } else {
    for (int k = 1; k <= 9; ++k) ladder.push_back(0.1 * k);
    c.provenance["c1"] = "grid-sup";
  }
  bool found = false;
  for (double c1 : ladder) {
    double sc = sup_of(coarse, c1, true), sf = sup_of(fine, c1, true);
    double r = ratio_of(sc, sf);
    if (std::isfinite(sf) && r <= 1.1) {
      c.c1 = c1;
      c.C2 = std::max(0.0, sf + std::max(0.0, sf - sc));
      c.ratio_C2 = r;
      found = true;
      break;
    }
  }
  if (!found)
    throw Error("non-stabilizing-sup", "no c1 in the ladder gives a stable sup of Lap U - c1 |grad U|^2");

  const double window = std::pow(1.0 - c.c1, 2) / 4.0;
  c.eps = policy.eps > 0.0 ? policy.eps : std::pow(1.0 - c.c1, 2) / 8.0;
  c.provenance["eps"] = "analytic";
  if (!(c.eps < window))
    throw Error("eps-out-of-window", "eps must be below (1-c1)^2/4 = " + std::to_string(window));

  double sc = sup_of(coarse, c.eps, false), sf = sup_of(fine, c.eps, false);
  c.ratio_C_eps = ratio_of(sc, sf);
  if (!std::isfinite(sf) || c.ratio_C_eps > 1.1)
    throw Error("non-stabilizing-sup", "sup of |Hess U| - eps |grad U|^2 moved by ratio " +
                                           std::to_string(c.ratio_C_eps) + " under refinement");
  c.C_eps = std::max(0.0, sf + std::max(0.0, sf - sc));
  c.provenance["C2"] = "grid-sup";
  c.provenance["C_eps"] = "grid-sup";
  return c;
}

double hessian_excess_sup(const PotentialSpec& pot, const GridBox& grid, double eps) {
  return sup_of(scan(pot, grid), eps, false);
}

int certificate_violations(const PotentialSpec& pot, const GrowthCertificate& cert, int n,
                           unsigned seed) {
  std::mt19937_64 rng(seed);
  int bad = 0;
  if (!(cert.eps < std::pow(1.0 - cert.c1, 2) / 4.0)) ++bad;
  for (int s = 0; s < n; ++s) {
    Vec q(pot.dim());
    for (int k = 0; k < pot.dim(); ++k) {
      std::uniform_real_distribution<double> u(cert.region.axes[k].lo, cert.region.axes[k].hi);
      q[k] = u(rng);
    }
    if (!pot.in_domain(q)) continue;
    double g2 = pot.grad(q).squaredNorm();
    if (pot.laplacian(q) > cert.c1 * g2 + cert.C2) ++bad;
    if (pot.hess_opnorm(q) > cert.eps * g2 + cert.C_eps) ++bad;
  }
  return bad;
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

double integrate_box(const std::function<double(const Vec&)>& f, const std::vector<Axis>& axes) {
  const double tol = 1e-11;
  if (axes.size() == 1) {
    auto g = [&](double x) { return f(Vec::Constant(1, x)); };
    return GK::integrate(g, axes[0].lo, axes[0].hi, 20, tol);
  }
  auto outer = [&](double x) {
    auto inner = [&](double y) {
      Vec q(2);
      q << x, y;
      return f(q);
    };
    return GK::integrate(inner, axes[1].lo, axes[1].hi, 15, tol);
  };
  return GK::integrate(outer, axes[0].lo, axes[0].hi, 15, tol);
}

std::vector<Axis> doubled(const std::vector<Axis>& axes) {
  auto out = axes;
  for (auto& a : out) {
    double c = 0.5 * (a.lo + a.hi);
    a.lo = c - 2.0 * (c - a.lo);
    a.hi = c + 2.0 * (a.hi - c);
  }
  return out;
}

}  // namespace

MomentsReport check_gradient_moments(const PotentialSpec& pot, const std::vector<double>& r_list,
                                     const QuadratureSpec& quad) {
  if (pot.dim() > 2 || quad.box.dim() != pot.dim())
    throw Error("bad-grid", "moment quadrature needs d in {1,2} and a matching box");
  const auto& box = quad.box.axes;
  const auto big = doubled(box);
  auto weight = [&](const Vec& q, double delta) {
    if (!pot.in_domain(q)) return 0.0;
    return std::exp(-delta * pot.U(q));
  };
  auto integral = [&](const std::vector<Axis>& ax, double r, double delta, bool moment) {
    return integrate_box(
        [&](const Vec& q) {
          double w = weight(q, delta);
          if (w == 0.0 || !moment) return w;
          return w * std::pow(pot.grad(q).norm(), r);
        },
        ax);
  };
  auto check = [&](MomentValue& m) {
    if (!std::isfinite(m.value) || m.tail_bound > quad.tol * std::max(1.0, std::abs(m.value)))
      throw Error("quadrature-nonconvergent",
                  "truncation tail " + std::to_string(m.tail_bound) + " exceeds tolerance");
  };

  MomentsReport rep;
  for (double delta : {0.25, 0.5}) {
    MomentValue m;
    m.r = delta;
    double a = integral(box, 0.0, delta, false);
    m.value = integral(big, 0.0, delta, false);
    m.tail_bound = std::abs(m.value - a);
    check(m);
    (delta == 0.25 ? rep.exp_quarter : rep.exp_half) = m;
  }
  const double Z0 = integral(box, 0.0, 1.0, false), Z1 = integral(big, 0.0, 1.0, false);
  for (double r : r_list) {
    if (r < 1.0 || r > 8.0) throw Error("bad-argument", "moment order must lie in [1, 8]");
    MomentValue m;
    m.r = r;
    double a = integral(box, r, 1.0, true) / Z0;
    m.value = integral(big, r, 1.0, true) / Z1;
    m.tail_bound = std::abs(m.value - a);
    check(m);
    rep.grad_moments.push_back(m);
  }
  return rep;
}

}  // namespace hypolab::potentials
