#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <limits>

#include "hypolab/generator_lab.hpp"

namespace hypolab::generator_lab {

Mat expmv(const SpMat& A, const Mat& V, double t, double tol) {
  double nrm = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    double s = 0.0;
    for (SpMat::InnerIterator it(A, k); it; ++it) s += std::abs(it.value());
    nrm = std::max(nrm, s);
  }
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t) * nrm)));
  const double dt = t / steps;
  Mat F = V;
  for (long s = 0; s < steps; ++s) {
    Mat term = F;
    Mat acc = F;
    for (int k = 1; k <= 80; ++k) {
      term = (dt / k) * (A * term);
      acc += term;
      if (term.norm() <= tol * acc.norm()) break;
    }
    F = acc;
  }
  return F;
}

Propagator::Propagator(const SpMat& L, int dense_limit) : L_(L), dense_(L.rows() <= dense_limit) {}

Mat Propagator::advance(const Mat& V, double dt) {
  if (dt == 0.0) return V;
  if (!dense_) return expmv(L_, V, dt);
  for (auto& [key, P] : cache_)
    if (std::abs(key - dt) <= 1e-9 * std::abs(dt)) return P * V;
  Mat Ld = Mat(L_) * dt;
  Mat P = Ld.exp();
  cache_.emplace(dt, P);
  return P * V;
}

double tail_rate(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> x, ly;
  for (size_t i = t.size() / 2; i < t.size(); ++i) {
    if (std::isfinite(y[i]) && y[i] > 1e-250) {
      x.push_back(t[i]);
      ly.push_back(std::log(y[i]));
    }
  }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += ly[i];
    sxx += x[i] * x[i];
    sxy += x[i] * ly[i];
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<DecayCurve> semigroup_decay(const KineticOperator& op, const std::vector<Vec>& phi0,
                                        const std::vector<double>& times, const NormSelector& norm,
                                        bool adjoint) {
  const int k = static_cast<int>(phi0.size());
  Mat V(op.size(), k);
  for (int j = 0; j < k; ++j) V.col(j) = phi0[j];
  std::unique_ptr<WeightedNorm> wn;
  if (norm.kind == NormSelector::Weighted) {
    if (!norm.weight) throw Error("bad-config", "weighted norm needs a weight function");
    wn = std::make_unique<WeightedNorm>(op, norm.weight);
  }
  auto measure = [&](const Vec& v) {
    switch (norm.kind) {
      case NormSelector::Modified: return std::sqrt(std::max(0.0, op.modified_norm2(v, norm.delta)));
      case NormSelector::Weighted: return std::sqrt(std::max(0.0, wn->norm2(v)));
      default: return std::sqrt(op.norm2(v));
    }
  };
  std::vector<double> plain0(k);
  for (int j = 0; j < k; ++j) plain0[j] = op.norm2(V.col(j));

  std::vector<DecayCurve> out(k);
  for (auto& c : out) c.t = times;
  Propagator prop(adjoint ? op.L_star() : op.L());
  double tprev = 0.0;
  for (double t : times) {
    if (t < tprev) throw Error("bad-config", "sample times must be nondecreasing and >= 0");
    V = prop.advance(V, t - tprev);
    tprev = t;
    for (int j = 0; j < k; ++j) {
      const Vec v = V.col(j);
      const double p2 = op.norm2(v);
      // P_t is a contraction in L^2(mu) on the grid; growth means the propagator failed
      if (!std::isfinite(p2) || p2 > plain0[j] * (1.0 + 1e-6) + 1e-300)
        throw Error("propagation-unstable", "L2(mu) norm grew at t = " + std::to_string(t));
      out[j].norm.push_back(measure(v));
    }
  }
  for (auto& c : out) c.fitted_rate = tail_rate(c.t, c.norm);
  return out;
}

}  // namespace hypolab::generator_lab
