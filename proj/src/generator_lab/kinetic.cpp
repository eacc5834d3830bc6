#include <algorithm>
#include <cmath>
#include <random>

#include "hypolab/generator_lab.hpp"

namespace hypolab::generator_lab {

using Triplets = std::vector<Eigen::Triplet<double>>;

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  // Golub-Welsch for the weight exp(-p^2/2) / sqrt(2 pi)
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    weights[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
  // symmetrise against eigensolver round-off
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (nodes[j] - nodes[i]), w = 0.5 * (weights[i] + weights[j]);
    nodes[i] = -x;
    nodes[j] = x;
    weights[i] = weights[j] = w;
  }
  if (n % 2) nodes[n / 2] = 0.0;
  double s = 0.0;
  for (double w : weights) s += w;
  for (double& w : weights) w /= s;
}

Vec hermite_functions(int n, double p) {
  Vec psi(n);
  psi[0] = 1.0;
  if (n > 1) psi[1] = p;
  for (int k = 1; k + 1 < n; ++k) psi[k + 1] = (p * psi[k] - std::sqrt(static_cast<double>(k)) * psi[k - 1]) / std::sqrt(k + 1.0);
  return psi;
}

KineticOperator::KineticOperator(PotentialPtr pot, const PhaseGrid& grid, double gamma)
    : grid_(grid), gamma_(gamma) {
  if (pot->dim() != 1) throw Error("bad-grid", "the kinetic discretisation is one-dimensional");
  if (grid.n_modes < 2) throw Error("bad-grid", "need at least two Hermite modes");

  if (!grid.p_nodes.empty()) {
    pn_ = grid.p_nodes;
    pw_ = grid.p_weights;
    if (pw_.size() != pn_.size()) throw Error("bad-grid", "p_nodes and p_weights differ in length");
  } else {
    const int np = grid.n_p_nodes > 0 ? grid.n_p_nodes : std::max(2 * grid.n_modes, 48);
    if (grid.p_rule == "gauss-hermite") {
      gauss_hermite(np, pn_, pw_);
    } else if (grid.p_rule == "uniform") {
      for (int j = 0; j < np; ++j) {
        pn_.push_back(-grid.p_max + 2.0 * grid.p_max * j / (np - 1));
        pw_.push_back(std::exp(-0.5 * pn_.back() * pn_.back()));
      }
    } else {
      throw Error("bad-grid", "unknown p rule '" + grid.p_rule + "'");
    }
  }
  std::vector<size_t> order(pn_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return pn_[a] < pn_[b]; });
  for (size_t i = 0; i < order.size(); ++i) {
    const size_t a = order[i], b = order[order.size() - 1 - i];
    const double scale = std::max(1.0, std::abs(pn_[a]));
    if (std::abs(pn_[a] + pn_[b]) > 1e-12 * scale || std::abs(pw_[a] - pw_[b]) > 1e-12 * std::max(pw_[a], pw_[b]))
      throw Error("asymmetric-p-grid", "p quadrature must be symmetric under p -> -p");
  }
  double ws = 0.0;
  for (double w : pw_) ws += w;
  for (double& w : pw_) w /= ws;

  od_ = std::make_shared<OverdampedOperator>(pot, potentials::GridBox{{grid.q}}, false);
  if (od_->size() != grid.q.n)
    throw Error("bad-grid", "q-axis spans more than the representable Boltzmann weight range");
  nq_ = grid.q.n;
  nm_ = grid.n_modes;
  off_.resize(nm_ + 1);
  off_[0] = 0;
  for (int n = 0; n < nm_; ++n) off_[n + 1] = off_[n] + block_size(n);
  n_ = off_[nm_];

  const Vec& w = od_->weights();
  const Vec& U = od_->U();
  const double h = grid.q.h();
  Vec dU(nq_ - 1);
  c_.resize(nq_ - 1);
  for (int k = 0; k + 1 < nq_; ++k) {
    dU[k] = U[k + 1] - U[k];
    c_[k] = w[k] * 2.0 / (1.0 + std::exp(dU[k]));
  }
  m_.resize(n_);
  one_ = Vec::Zero(n_);
  for (int n = 0; n < nm_; ++n) m_.segment(off_[n], block_size(n)) = n % 2 == 0 ? w : c_;
  one_.head(nq_).setOnes();

  // D: nodes -> edges, D*: edges -> nodes, E: edges -> nodes, E*: nodes -> edges
  Triplets tD, tDs, tE, tEs;
  for (int k = 0; k + 1 < nq_; ++k) {
    tD.emplace_back(k, k, -1.0 / h);
    tD.emplace_back(k, k + 1, 1.0 / h);
    tE.emplace_back(k, k, 1.0 / h);
    tE.emplace_back(k + 1, k, -1.0 / h);
    // (D* g)_i = (c_{i-1} g_{i-1} - c_i g_i) / (h w_i)
    tDs.emplace_back(k, k, -2.0 / (1.0 + std::exp(dU[k])) / h);
    tDs.emplace_back(k + 1, k, 2.0 / (1.0 + std::exp(-dU[k])) / h);
    // (E* f)_k = (w_k f_k - w_{k+1} f_{k+1}) / (h c_k)
    tEs.emplace_back(k, k, 0.5 * (1.0 + std::exp(dU[k])) / h);
    tEs.emplace_back(k, k + 1, -0.5 * (1.0 + std::exp(-dU[k])) / h);
  }
  SpMat D(nq_ - 1, nq_), Ds(nq_, nq_ - 1), E(nq_, nq_ - 1), Es(nq_ - 1, nq_);
  D.setFromTriplets(tD.begin(), tD.end());
  Ds.setFromTriplets(tDs.begin(), tDs.end());
  E.setFromTriplets(tE.begin(), tE.end());
  Es.setFromTriplets(tEs.begin(), tEs.end());
  Dstar_ = Ds;

  Triplets tH, tO;
  auto put = [&](const SpMat& B, int r0, int c0, double s) {
    for (int k = 0; k < B.outerSize(); ++k)
      for (SpMat::InnerIterator it(B, k); it; ++it) tH.emplace_back(r0 + it.row(), c0 + it.col(), s * it.value());
  };
  for (int n = 0; n + 1 < nm_; ++n) {
    const double s = std::sqrt(n + 1.0);
    if (n % 2 == 0) {
      put(D, off_[n + 1], off_[n], s);
      put(Ds, off_[n], off_[n + 1], -s);
    } else {
      put(E, off_[n + 1], off_[n], s);
      put(Es, off_[n], off_[n + 1], -s);
    }
  }
  for (int n = 0; n < nm_; ++n)
    for (int k = 0; k < block_size(n); ++k) tO.emplace_back(off_[n] + k, off_[n] + k, -static_cast<double>(n));
  LH_.resize(n_, n_);
  LH_.setFromTriplets(tH.begin(), tH.end());
  LOU_.resize(n_, n_);
  LOU_.setFromTriplets(tO.begin(), tO.end());
  L_ = LH_ + gamma_ * LOU_;
  Lstar_ = gamma_ * LOU_ - LH_;
}

double KineticOperator::position(int mode, int k) const {
  const double x = grid_.q.at(k);
  return mode % 2 == 0 ? x : x + 0.5 * grid_.q.h();
}

SpMat KineticOperator::mu_adjoint(const SpMat& A) const {
  SpMat At = A.transpose();
  return m_.cwiseInverse().asDiagonal() * At * m_.asDiagonal();
}

Vec KineticOperator::pi(const Vec& phi) const {
  Vec r = Vec::Zero(n_);
  r.head(nq_) = phi.head(nq_);
  return r;
}

Vec KineticOperator::reverse(const Vec& phi) const {
  Vec r = phi;
  for (int n = 1; n < nm_; n += 2) r.segment(off_[n], block_size(n)) *= -1.0;
  return r;
}

Vec KineticOperator::from_q(const Vec& f) const {
  Vec r = Vec::Zero(n_);
  r.head(nq_) = f;
  return r;
}

Vec KineticOperator::project(const std::function<double(double, double)>& phi) const {
  const int np = static_cast<int>(pn_.size());
  Mat Psi(np, nm_);
  for (int j = 0; j < np; ++j) Psi.row(j) = hermite_functions(nm_, pn_[j]).transpose() * pw_[j];
  Vec r(n_);
  Vec vals(np);
  for (int parity = 0; parity < 2; ++parity) {
    const int count = parity == 0 ? nq_ : nq_ - 1;
    for (int k = 0; k < count; ++k) {
      const double x = position(parity, k);
      for (int j = 0; j < np; ++j) vals[j] = phi(x, pn_[j]);
      const Vec coef = Psi.transpose() * vals;
      for (int n = parity; n < nm_; n += 2) r[off_[n] + k] = coef[n];
    }
  }
  return r;
}

double KineticOperator::evaluate(const Vec& phi, int i, double p) const {
  const Vec psi = hermite_functions(nm_, p);
  double v = 0.0;
  for (int n = 0; n < nm_; ++n) {
    double f;
    if (n % 2 == 0) {
      f = phi[off_[n] + i];
    } else if (i == 0) {
      f = phi[off_[n]];
    } else if (i == nq_ - 1) {
      f = phi[off_[n] + nq_ - 2];
    } else {
      f = 0.5 * (phi[off_[n] + i - 1] + phi[off_[n] + i]);
    }
    v += f * psi[n];
  }
  return v;
}

Vec KineticOperator::apply_A(const Vec& phi) const {
  // Pi L_H phi only sees mode 1: -D* phi_1
  const Vec rhs = -(Dstar_ * phi.segment(off_[1], nq_ - 1));
  return from_q(od_->resolvent(rhs));
}

double KineticOperator::grad_p_norm2(const Vec& phi) const {
  double s = 0.0;
  for (int n = 1; n < nm_; ++n) {
    const auto seg = phi.segment(off_[n], block_size(n));
    s += n * (m_.segment(off_[n], block_size(n)).array() * seg.array().square()).sum();
  }
  return s;
}

double KineticOperator::modified_norm2(const Vec& phi, double delta) const {
  return norm2(phi) + delta * inner(apply_A(phi), phi);
}

double KineticOperator::weighted_norm2(const Vec& phi, const std::function<double(double, double)>& V) const {
  return WeightedNorm(*this, V).norm2(phi);
}

WeightedNorm::WeightedNorm(const KineticOperator& op, const std::function<double(double, double)>& V) : op_(&op) {
  const auto& pn = op.p_nodes();
  const auto& pw = op.p_weights();
  const int np = static_cast<int>(pn.size()), nm = op.n_modes();
  Mat Psi(np, nm);
  for (int j = 0; j < np; ++j) Psi.row(j) = hermite_functions(nm, pn[j]).transpose();
  auto local = [&](double x) {
    Vec v(np);
    for (int j = 0; j < np; ++j) v[j] = pw[j] * V(x, pn[j]);
    return Mat(Psi.transpose() * v.asDiagonal() * Psi);
  };
  for (int i = 0; i < op.nq(); ++i) node_.push_back(local(op.position(0, i)));
  for (int k = 0; k + 1 < op.nq(); ++k) edge_.push_back(local(op.position(1, k)));
}

double WeightedNorm::norm2(const Vec& phi) const {
  const auto& op = *op_;
  const int nq = op.nq(), nm = op.n_modes();
  const Vec& w = op.overdamped().weights();
  const Vec& m = op.mass();
  double s = 0.0;
  Vec a(nm);
  for (int i = 0; i < nq; ++i) {
    for (int n = 0; n < nm; ++n) {
      const int o = op.offset(n);
      if (n % 2 == 0) a[n] = phi[o + i];
      else if (i == 0) a[n] = phi[o];
      else if (i == nq - 1) a[n] = phi[o + nq - 2];
      else a[n] = 0.5 * (phi[o + i - 1] + phi[o + i]);
    }
    const Mat& Vn = node_[i];
    double t = 0.0;
    for (int n = 0; n < nm; ++n)
      for (int l = 0; l < nm; ++l)
        if (n % 2 == 0 || l % 2 == 0) t += a[n] * Vn(n, l) * a[l];
    s += w[i] * t;
  }
  for (int k = 0; k + 1 < nq; ++k) {
    const Mat& Ve = edge_[k];
    double t = 0.0;
    for (int n = 1; n < nm; n += 2)
      for (int l = 1; l < nm; l += 2) t += phi[op.offset(n) + k] * Ve(n, l) * phi[op.offset(l) + k];
    s += m[op.offset(1) + k] * t;
  }
  return s;
}

KineticOperator discretize_kinetic(PotentialPtr pot, const PhaseGrid& grid, double gamma) {
  return KineticOperator(std::move(pot), grid, gamma);
}

Vec random_phase_function(const KineticOperator& op, std::mt19937_64& rng, int max_mode, int deg, bool mean_zero) {
  std::normal_distribution<double> nd;
  const Axis& q = op.grid().q;
  Vec r = Vec::Zero(op.size());
  for (int n = 0; n <= std::min(max_mode, op.n_modes() - 1); ++n) {
    Vec c(deg + 1);
    for (int k = 0; k <= deg; ++k) c[k] = nd(rng);
    for (int k = 0; k < op.block_size(n); ++k) {
      const double s = std::clamp(2.0 * (op.position(n, k) - q.lo) / (q.hi - q.lo) - 1.0, -1.0, 1.0);
      // Chebyshev recurrence
      double t0 = 1.0, t1 = s, v = c[0];
      if (deg >= 1) v += c[1] * t1;
      for (int j = 2; j <= deg; ++j) {
        const double t2 = 2.0 * s * t1 - t0;
        v += c[j] * t2;
        t0 = t1;
        t1 = t2;
      }
      r[op.offset(n) + k] = v;
    }
  }
  if (mean_zero) r -= op.mean(r) * op.one();
  return r;
}

}  // namespace hypolab::generator_lab
