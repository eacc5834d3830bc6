#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

#include "hypolab/generator_lab.hpp"

namespace hypolab::generator_lab {

namespace {

// Nodes whose Boltzmann weight falls below exp(-kDrop) relative to the
// heaviest node are removed; they carry no mass in double precision.
constexpr double kDrop = 600.0;

using Triplets = std::vector<Eigen::Triplet<double>>;

}  // namespace

struct OverdampedOperator::Solver {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Vec sqw;
};

OverdampedOperator::OverdampedOperator(PotentialPtr pot, potentials::GridBox box, bool mask_domain)
    : pot_(std::move(pot)), box_(std::move(box)), mask_(mask_domain) {
  const int d = box_.dim();
  if (d != pot_->dim()) throw Error("bad-grid", "grid dimension does not match the potential");
  const long N = box_.size();

  std::vector<double> U(N, std::numeric_limits<double>::infinity());
  double umin = std::numeric_limits<double>::infinity();
  for (long f = 0; f < N; ++f) {
    Vec q = box_.node(f);
    if (!pot_->in_domain(q)) {
      if (!mask_) throw Error("grid-exits-domain", "grid node outside the domain of " + pot_->id());
      continue;
    }
    U[f] = pot_->U(q);
    if (!std::isfinite(U[f])) {
      if (!mask_) throw Error("grid-exits-domain", "potential not finite on the grid");
      continue;
    }
    umin = std::min(umin, U[f]);
  }
  active_.assign(N, -1);
  for (long f = 0; f < N; ++f) {
    if (U[f] - umin <= kDrop) {
      active_[f] = static_cast<int>(flat_.size());
      flat_.push_back(f);
    }
  }
  const int n = static_cast<int>(flat_.size());
  if (n < 3) throw Error("bad-grid", "fewer than three active nodes");

  double cell = 1.0;
  for (const auto& a : box_.axes) cell *= a.h();
  w_.resize(n);
  U_.resize(n);
  x_.resize(d, n);
  for (int k = 0; k < n; ++k) {
    U_[k] = U[flat_[k]];
    w_[k] = std::exp(-(U_[k] - umin)) * cell;
    x_.col(k) = box_.node(flat_[k]);
  }
  w_ /= w_.sum();

  Triplets tl, ts;
  Vec diag = Vec::Zero(n);
  long stride = 1;
  for (int ax = 0; ax < d; ++ax) {
    const Axis& A = box_.axes[ax];
    const double h2 = A.h() * A.h();
    for (int a = 0; a < n; ++a) {
      const long f = flat_[a];
      if ((f / stride) % A.n == A.n - 1) continue;
      const int b = active_[f + stride];
      if (b < 0) continue;
      const double dU = U_[b] - U_[a];
      // harmonic mean c of w_a, w_b expressed through dU
      const double ca = 2.0 / (1.0 + std::exp(dU));   // c / w_a
      const double cb = 2.0 / (1.0 + std::exp(-dU));  // c / w_b
      tl.emplace_back(a, b, ca / h2);
      tl.emplace_back(b, a, cb / h2);
      diag[a] += ca / h2;
      diag[b] += cb / h2;
      const double s = -1.0 / (std::cosh(0.5 * dU) * h2);
      ts.emplace_back(a, b, s);
      ts.emplace_back(b, a, s);
    }
    stride *= A.n;
  }
  for (int a = 0; a < n; ++a) {
    tl.emplace_back(a, a, -diag[a]);
    ts.emplace_back(a, a, diag[a]);
  }
  L_.resize(n, n);
  L_.setFromTriplets(tl.begin(), tl.end());
  S_.resize(n, n);
  S_.setFromTriplets(ts.begin(), ts.end());

  solver_ = std::make_shared<Solver>();
  SpMat I(n, n);
  I.setIdentity();
  solver_->ldlt.compute(I + S_);
  if (solver_->ldlt.info() != Eigen::Success) throw Error("eigensolver-nonconverged", "factorisation of 1 + S failed");
  solver_->sqw = w_.cwiseSqrt();
}

Vec OverdampedOperator::resolvent(const Vec& phi) const {
  Vec xi = solver_->ldlt.solve(solver_->sqw.cwiseProduct(phi));
  return xi.cwiseQuotient(solver_->sqw);
}

Vec OverdampedOperator::sample(const std::function<double(const Vec&)>& f) const {
  Vec v(size());
  for (int k = 0; k < size(); ++k) v[k] = f(x_.col(k));
  return v;
}

double OverdampedOperator::hessian_norm2(const Vec& f) const {
  const int d = dim();
  std::vector<long> stride(d, 1);
  for (int k = 1; k < d; ++k) stride[k] = stride[k - 1] * box_.axes[k - 1].n;
  auto at = [&](long flat) -> const double* {
    const int a = active_[flat];
    return a < 0 ? nullptr : &f[a];
  };
  double num = 0.0, mass = 0.0;
  for (int a = 0; a < size(); ++a) {
    const long fl = flat_[a];
    bool full = true;
    for (int k = 0; k < d && full; ++k) {
      const long ik = (fl / stride[k]) % box_.axes[k].n;
      full = ik > 0 && ik < box_.axes[k].n - 1 && at(fl + stride[k]) && at(fl - stride[k]);
    }
    if (!full) continue;
    double hf = 0.0;
    for (int k = 0; k < d && full; ++k) {
      const double hk = box_.axes[k].h();
      const double dkk = (*at(fl + stride[k]) - 2.0 * f[a] + *at(fl - stride[k])) / (hk * hk);
      hf += dkk * dkk;
      for (int l = k + 1; l < d; ++l) {
        const double hl = box_.axes[l].h();
        const double* pp = at(fl + stride[k] + stride[l]);
        const double* pm = at(fl + stride[k] - stride[l]);
        const double* mp = at(fl - stride[k] + stride[l]);
        const double* mm = at(fl - stride[k] - stride[l]);
        if (!(pp && pm && mp && mm)) {
          full = false;
          break;
        }
        const double dkl = (*pp - *pm - *mp + *mm) / (4.0 * hk * hl);
        hf += 2.0 * dkl * dkl;
      }
    }
    if (!full) continue;
    num += w_[a] * hf;
    mass += w_[a];
  }
  return mass > 0.0 ? num / mass : 0.0;
}

double OverdampedOperator::symmetry_defect() const {
  // W L must be symmetric
  SpMat WL = w_.asDiagonal() * L_;
  SpMat T = SpMat(WL.transpose()) - WL;
  double m = 0.0;
  for (int k = 0; k < T.outerSize(); ++k)
    for (SpMat::InnerIterator it(T, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

OverdampedOperator discretize_overdamped(PotentialPtr pot, const potentials::GridBox& box, bool mask_domain) {
  return OverdampedOperator(std::move(pot), box, mask_domain);
}

namespace {

struct SmallestEig {
  double value, residual;
  int iterations;
};

// Smallest eigenvalue of S on the complement of v0 by shift-invert subspace iteration.
SmallestEig smallest_nonzero(const SpMat& S, const Vec& v0) {
  const int n = static_cast<int>(S.rows());
  const int k = std::min(6, n - 1);
  const double tau = 1e-2;
  SpMat I(n, n);
  I.setIdentity();
  Eigen::SimplicialLDLT<SpMat> solver(S + tau * I);
  if (solver.info() != Eigen::Success) throw Error("eigensolver-nonconverged", "shifted factorisation failed");
  const Vec u = v0.normalized();
  auto deflate = [&](Mat& X) {
    for (int j = 0; j < X.cols(); ++j) X.col(j) -= u.dot(X.col(j)) * u;
  };
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  Mat X(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) X(i, j) = nd(rng);
  deflate(X);
  SmallestEig out{0.0, 1e300, 0};
  double prev = 0.0;
  for (int it = 1; it <= 2000; ++it) {
    Mat Y = solver.solve(X);
    deflate(Y);
    Eigen::HouseholderQR<Mat> qr(Y);
    X = qr.householderQ() * Mat::Identity(n, k);
    deflate(X);
    Mat G = X.transpose() * (S * X);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.transpose()));
    X = X * es.eigenvectors();
    const double theta = es.eigenvalues()[0];
    const Vec r = S * X.col(0) - theta * X.col(0);
    out = {theta, r.norm(), it};
    if (out.residual <= 1e-10 * std::max(std::abs(theta), 1e-8) && std::abs(theta - prev) <= 1e-13 * std::abs(theta))
      return out;
    prev = theta;
  }
  if (out.residual > 1e-7 * std::max(std::abs(out.value), 1e-8))
    throw Error("eigensolver-nonconverged", "Poincare iteration did not converge");
  return out;
}

}  // namespace

PoincareReport poincare_constant(const OverdampedOperator& op, bool with_refinement) {
  PoincareReport r;
  auto e = smallest_nonzero(op.symmetric_form(), op.weights().cwiseSqrt());
  r.rho = e.value;
  r.residual = e.residual;
  r.iterations = e.iterations;
  if (with_refinement) {
    OverdampedOperator fine(op.potential(), op.box().refined(), op.masked());
    r.rho_half = smallest_nonzero(fine.symmetric_form(), fine.weights().cwiseSqrt()).value;
  }
  return r;
}

Vec random_q_function(const OverdampedOperator& op, std::mt19937_64& rng, int deg, bool mean_zero) {
  std::normal_distribution<double> nd;
  const int d = op.dim();
  // coefficients for all multi-indices with total degree <= deg (d <= 2)
  std::vector<std::pair<std::vector<int>, double>> terms;
  if (d == 1) {
    for (int k = 0; k <= deg; ++k) terms.push_back({{k}, nd(rng)});
  } else {
    for (int k = 0; k <= deg; ++k)
      for (int l = 0; k + l <= deg; ++l) {
        std::vector<int> idx(d, 0);
        idx[0] = k;
        idx[1] = l;
        terms.push_back({idx, nd(rng)});
      }
  }
  const auto& box = op.box();
  Vec f = op.sample([&](const Vec& q) {
    double v = 0.0;
    for (const auto& [idx, c] : terms) {
      double t = c;
      for (int a = 0; a < d; ++a) {
        const double s = 2.0 * (q[a] - box.axes[a].lo) / (box.axes[a].hi - box.axes[a].lo) - 1.0;
        t *= std::cos(idx[a] * std::acos(std::clamp(s, -1.0, 1.0)));
      }
      v += t;
    }
    return v;
  });
  if (mean_zero) f.array() -= op.mean(f);
  return f;
}

}  // namespace hypolab::generator_lab
