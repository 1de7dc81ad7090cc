#include "stq/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace stq {

namespace {

template <class T>
void orthogonalize(Vec<T>& w, std::span<const Vec<T>> basis) {
  // Two passes of classical Gram-Schmidt.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : basis) w -= q.dot(w) * q;
  }
}

template <class T>
Vec<T> randomVector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vec<T> v(n);
  for (Index i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<T, double>) {
      v(i) = gauss(rng);
    } else {
      double re = gauss(rng);
      double im = gauss(rng);
      v(i) = cd(re, im);
    }
  }
  return v;
}

}  // namespace

template <class T>
EigenPair<T> lanczosLowest(const LinearMap<T>& apply, const Vec<T>& start,
                           const LanczosSettings& settings, std::span<const Vec<T>> deflate) {
  const Index n = start.size();
  if (n == 0) throw InvalidArgument("empty Lanczos start vector");
  const Index freeDim = n - static_cast<Index>(deflate.size());
  if (freeDim < 1) throw InvalidArgument("deflation space fills the whole space");

  Vec<T> x = start;
  orthogonalize(x, deflate);
  if (!(x.norm() > 1e-12 * std::max(1.0, start.norm()))) {
    x = randomVector<T>(n, 0x5eed);
    orthogonalize(x, deflate);
  }
  x.normalize();

  EigenPair<T> result;
  Vec<T> hx(n);
  for (int restart = 0; restart <= settings.maxRestarts; ++restart) {
    std::vector<Vec<T>> basis{x};
    std::vector<double> alpha;
    std::vector<double> beta;
    Vec<T> w(n);
    Index maxDim = std::min<Index>(settings.krylovDim, freeDim);
    Vec<T> ritz;
    double theta = 0.0;
    for (Index j = 0; j < maxDim; ++j) {
      apply(basis[j], w);
      ++result.matvecs;
      double a = realPart(basis[j].dot(w));
      alpha.push_back(a);
      w -= a * basis[j];
      if (j > 0) w -= beta[j - 1] * basis[j - 1];
      orthogonalize<T>(w, basis);
      orthogonalize(w, deflate);
      double b = w.norm();

      Index m = j + 1;
      VecR diag = Eigen::Map<VecR>(alpha.data(), m);
      VecR sub = m > 1 ? VecR(Eigen::Map<VecR>(beta.data(), m - 1)) : VecR();
      Eigen::SelfAdjointEigenSolver<MatR> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      VecR y = tri.eigenvectors().col(0);
      theta = tri.eigenvalues()(0);
      double estimate = b * std::abs(y(m - 1));
      double scale = std::max(1.0, std::abs(theta));
      bool exhausted = (m == maxDim) || b < 1e-14 * scale;
      if (estimate < 0.1 * settings.tol || exhausted) {
        ritz = Vec<T>::Zero(n);
        for (Index i = 0; i < m; ++i) ritz += y(i) * basis[i];
        break;
      }
      beta.push_back(b);
      basis.push_back(w / b);
    }
    orthogonalize(ritz, deflate);
    ritz.normalize();
    apply(ritz, hx);
    ++result.matvecs;
    theta = realPart(ritz.dot(hx));
    Vec<T> r = hx - theta * ritz;
    orthogonalize(r, deflate);
    result.value = theta;
    result.vector = ritz;
    result.residual = r.norm();
    if (result.residual < settings.tol) {
      result.converged = true;
      return result;
    }
    x = ritz;
  }
  return result;
}

template EigenPair<double> lanczosLowest<double>(const LinearMap<double>&, const Vec<double>&,
                                                 const LanczosSettings&,
                                                 std::span<const Vec<double>>);
template EigenPair<cd> lanczosLowest<cd>(const LinearMap<cd>&, const Vec<cd>&,
                                         const LanczosSettings&, std::span<const Vec<cd>>);

KrylovExpResult krylovExp(const LinearMap<cd>& apply, const Vec<cd>& v, cd z,
                          const KrylovExpSettings& settings) {
  const Index n = v.size();
  KrylovExpResult result;
  double beta0 = v.norm();
  if (beta0 == 0.0) {
    result.vector = v;
    return result;
  }
  std::vector<Vec<cd>> basis{v / beta0};
  std::vector<double> alpha;
  std::vector<double> beta;
  Vec<cd> w(n);
  Index maxDim = std::min<Index>(settings.maxDim, n);
  for (Index j = 0; j < maxDim; ++j) {
    apply(basis[j], w);
    double a = basis[j].dot(w).real();
    alpha.push_back(a);
    w -= a * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    orthogonalize<cd>(w, basis);
    double b = w.norm();

    Index m = j + 1;
    VecR diag = Eigen::Map<VecR>(alpha.data(), m);
    VecR sub = m > 1 ? VecR(Eigen::Map<VecR>(beta.data(), m - 1)) : VecR();
    Eigen::SelfAdjointEigenSolver<MatR> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const MatR& q = tri.eigenvectors();
    Vec<cd> phase(m);
    for (Index i = 0; i < m; ++i) phase(i) = std::exp(z * tri.eigenvalues()(i)) * q(0, i);
    Vec<cd> c = q.cast<cd>() * phase;  // exp(z T) e_1

    double scale = std::max(1.0, tri.eigenvalues().cwiseAbs().maxCoeff());
    bool invariant = b < 1e-14 * scale;
    double estimate = invariant ? 0.0 : b * std::abs(c(m - 1)) * std::max(1.0, std::abs(z));
    if (estimate < settings.tol || invariant || m == n) {
      result.vector = Vec<cd>::Zero(n);
      for (Index i = 0; i < m; ++i) result.vector += c(i) * basis[i];
      result.vector *= beta0;
      result.errorEstimate = estimate;
      result.dim = static_cast<int>(m);
      return result;
    }
    beta.push_back(b);
    basis.push_back(w / b);
  }
  throw ConvergenceError("Krylov exponential did not converge within the subspace limit");
}

Vec<cd> krylovExpWithRetry(const LinearMap<cd>& apply, const Vec<cd>& v, cd z,
                           const KrylovExpSettings& settings) {
  try {
    return krylovExp(apply, v, z, settings).vector;
  } catch (const ConvergenceError&) {
    Vec<cd> half = krylovExp(apply, v, 0.5 * z, settings).vector;
    return krylovExp(apply, half, 0.5 * z, settings).vector;
  }
}

}  // namespace stq
