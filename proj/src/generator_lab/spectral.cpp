#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>

#include "hypolab/generator_lab.hpp"

namespace hypolab::generator_lab {

namespace {

double norm1(const SpMat& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    double s = 0.0;
    for (SpMat::InnerIterator it(A, k); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

}  // namespace

GapResult spectral_gap(const SpMat& L, const Vec& mass, const Vec& one, const GapOptions& opt) {
  using cd = std::complex<double>;
  const int n = static_cast<int>(L.rows());
  SpMat I(n, n);
  I.setIdentity();
  SpMat A = L - opt.shift * I;
  A.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error("eigensolver-nonconverged", "factorisation of L - shift failed");

  const Vec mo = mass.cwiseProduct(one);
  const double oo = mo.dot(one);
  auto deflate = [&](Vec& v) { v -= (mo.dot(v) / oo) * one; };
  const double scale = std::max(1.0, norm1(L));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  Vec v0(n);
  for (int i = 0; i < n; ++i) v0[i] = nd(rng);
  deflate(v0);
  v0.normalize();

  const int m = std::min(opt.krylov, n - 2);
  GapResult best;
  best.residual = 1e300;
  for (int restart = 0; restart <= opt.restarts; ++restart) {
    Mat V(n, m + 1);
    Mat H = Mat::Zero(m + 1, m);
    V.col(0) = v0;
    int mm = m;
    for (int j = 0; j < m; ++j) {
      Vec w = lu.solve(V.col(j));
      deflate(w);
      for (int pass = 0; pass < 2; ++pass) {
        const Vec h = V.leftCols(j + 1).transpose() * w;
        w -= V.leftCols(j + 1) * h;
        H.col(j).head(j + 1) += h;
      }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) < 1e-14 * H.col(j).norm()) {
        mm = j + 1;
        break;
      }
      V.col(j + 1) = w / H(j + 1, j);
    }
    Eigen::ComplexEigenSolver<Mat> es(H.topLeftCorner(mm, mm));
    // rightmost Ritz value with Re < 0 (the numerical range of L lies in Re <= 0)
    std::vector<std::pair<cd, int>> ritz;
    for (int k = 0; k < mm; ++k) {
      const cd th = es.eigenvalues()[k];
      if (std::abs(th) < 1e-300) continue;
      const cd lam = opt.shift + 1.0 / th;
      if (lam.real() < -1e-12) ritz.push_back({lam, k});
    }
    if (ritz.empty()) throw Error("eigensolver-nonconverged", "no admissible Ritz values");
    std::sort(ritz.begin(), ritz.end(), [](const auto& a, const auto& b) { return a.first.real() > b.first.real(); });
    const auto [lam, k] = ritz.front();
    const Eigen::VectorXcd x = V.leftCols(mm).cast<cd>() * es.eigenvectors().col(k);
    const double xn = x.norm();
    const Eigen::VectorXcd r = L.cast<cd>() * x - lam * x;
    const double res = r.norm() / (xn * scale);

    best.gap = -lam.real();
    best.leading = lam;
    best.residual = res;
    best.iterations = restart + 1;
    if (std::abs(lam.imag()) > 1e-10 * std::abs(lam)) {
      best.partner = std::conj(lam);
    } else {
      best.partner = ritz.size() > 1 ? ritz[1].first : lam;
    }
    if (res <= opt.tol) return best;
    // restart from the target Ritz vector; the real combination keeps conjugate pairs together
    v0 = x.real() + x.imag();
    deflate(v0);
    v0.normalize();
  }
  if (best.residual > 1e3 * opt.tol)
    throw Error("eigensolver-nonconverged", "Arnoldi residual " + std::to_string(best.residual));
  return best;
}

GapResult spectral_gap(const KineticOperator& op, bool adjoint, const GapOptions& opt) {
  return spectral_gap(adjoint ? op.L_star() : op.L(), op.mass(), op.one(), opt);
}

}  // namespace hypolab::generator_lab
