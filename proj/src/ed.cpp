#include "stq/ed.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

namespace stq {

namespace {

void requireEdSize(int n) {
  if (n < 1 || n > kMaxEdSites) {
    throw InvalidArgument("exact diagonalization supports 1.." + std::to_string(kMaxEdSites) +
                          " sites");
  }
}

// +1 for spin up (bit 0), -1 for spin down.
inline double zValue(std::uint64_t basis, std::uint64_t mask) {
  return (basis & mask) ? -1.0 : 1.0;
}

}  // namespace

SpinFlipOperator tfiOperator(const LatticeGeometry& geometry, std::span<const double> fields,
                             double J) {
  const int n = geometry.size();
  requireEdSize(n);
  if (static_cast<int>(fields.size()) != n) throw InvalidArgument("field vector length mismatch");

  SpinFlipOperator op;
  op.numSites = n;
  auto addBond = [&](int a, int b) {
    op.masks.push_back(siteMask(a, n) | siteMask(b, n));
    op.coefs.push_back(-J);
  };
  for (int x = 0; x < geometry.lx(); ++x) {
    for (int y = 0; y < geometry.ly(); ++y) {
      int site = geometry.siteIndex(x, y);
      if (x + 1 < geometry.lx()) addBond(site, geometry.siteIndex(x + 1, y));
      if (y + 1 < geometry.ly()) {
        addBond(site, geometry.siteIndex(x, y + 1));
      } else if (geometry.yPeriodic() && geometry.ly() >= 3) {
        addBond(site, geometry.siteIndex(x, 0));
      }
    }
  }

  const std::uint64_t dim = std::uint64_t{1} << n;
  op.diagonal = VecR::Zero(static_cast<Index>(dim));
  for (std::uint64_t b = 0; b < dim; ++b) {
    double value = 0.0;
    for (int i = 0; i < n; ++i) value -= fields[i] * zValue(b, siteMask(i, n));
    op.diagonal(static_cast<Index>(b)) = value;
  }
  return op;
}

SpinFlipOperator pauliSumOperator(const PauliSum& terms, int numSites) {
  requireEdSize(numSites);
  SpinFlipOperator op;
  op.numSites = numSites;
  const std::uint64_t dim = std::uint64_t{1} << numSites;
  op.diagonal = VecR::Zero(static_cast<Index>(dim));
  for (const auto& term : terms) {
    std::uint64_t xMask = 0;
    std::uint64_t zMask = 0;
    for (const auto& f : term.factors) {
      if (f.site < 0 || f.site >= numSites) throw InvalidArgument("term site out of range");
      if (f.op == Pauli::X) {
        xMask |= siteMask(f.site, numSites);
      } else if (f.op == Pauli::Z) {
        zMask |= siteMask(f.site, numSites);
      } else if (f.op != Pauli::I) {
        throw InvalidArgument("only X and Z strings are supported");
      }
    }
    if (xMask && zMask) throw InvalidArgument("mixed X/Z strings are not supported");
    if (xMask) {
      op.masks.push_back(xMask);
      op.coefs.push_back(term.coef);
    } else {
      for (std::uint64_t b = 0; b < dim; ++b) {
        double sign = (std::popcount(b & zMask) % 2 == 0) ? 1.0 : -1.0;
        op.diagonal(static_cast<Index>(b)) += term.coef * sign;
      }
    }
  }
  return op;
}

MatR toDenseMatrix(const SpinFlipOperator& op) {
  const Index dim = op.diagonal.size();
  if (op.numSites > 12) throw InvalidArgument("dense matrix limited to 12 sites");
  MatR h = op.diagonal.asDiagonal();
  for (std::size_t m = 0; m < op.masks.size(); ++m)
    for (Index b = 0; b < dim; ++b) h(static_cast<Index>(static_cast<std::uint64_t>(b) ^ op.masks[m]), b) += op.coefs[m];
  return h;
}

Spectrum denseSpectrum(const SpinFlipOperator& op, int k) {
  requireEdSize(op.numSites);
  const Index dim = op.diagonal.size();
  if (k < 1 || k > dim) throw InvalidArgument("invalid number of eigenpairs");
  Spectrum out;
  LinearMap<double> apply = [&op](const VecR& x, VecR& y) {
    y.resize(x.size());
    kernels::applySpinFlip(op, x.data(), y.data());
  };

  if (op.numSites <= 10) {
    Eigen::SelfAdjointEigenSolver<MatR> solver(toDenseMatrix(op));
    out.values = solver.eigenvalues().head(k);
    for (int i = 0; i < k; ++i) out.vectors.push_back(solver.eigenvectors().col(i));
  } else {
    LanczosSettings settings;
    settings.krylovDim = 120;
    settings.maxRestarts = 60;
    settings.tol = 1e-11;
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> gauss;
    std::vector<VecR> found;
    std::vector<double> values;
    for (int i = 0; i < k; ++i) {
      VecR start(dim);
      for (Index j = 0; j < dim; ++j) start(j) = gauss(rng);
      EigenPair<double> pair = lanczosLowest<double>(apply, start, settings, found);
      if (!pair.converged) throw ConvergenceError("Lanczos did not converge in denseSpectrum");
      found.push_back(pair.vector);
      values.push_back(pair.value);
    }
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    out.values.resize(k);
    for (int i = 0; i < k; ++i) {
      out.values(i) = values[order[i]];
      out.vectors.push_back(found[order[i]]);
    }
  }
  VecR hx(dim);
  for (int i = 0; i < k; ++i) {
    apply(out.vectors[i], hx);
    out.residuals.push_back((hx - out.values(i) * out.vectors[i]).norm());
  }
  return out;
}

Spectrum denseSpectrum(const LatticeGeometry& geometry, std::span<const double> fields, double J,
                       int k) {
  return denseSpectrum(tfiOperator(geometry, fields, J), k);
}

template <class T>
double expectationDense(const SpinFlipOperator& op, const Vec<T>& psi) {
  Vec<T> hpsi(psi.size());
  kernels::applySpinFlip(op, psi.data(), hpsi.data());
  return realPart(psi.dot(hpsi)) / psi.squaredNorm();
}

template <class T>
double xxCorrelationDense(const Vec<T>& psi, int siteA, int siteB, int numSites) {
  std::uint64_t mask = siteMask(siteA, numSites) | siteMask(siteB, numSites);
  T acc = T(0);
  for (Index b = 0; b < psi.size(); ++b) {
    acc += conjugate(psi(b)) * psi(static_cast<Index>(static_cast<std::uint64_t>(b) ^ mask));
  }
  return realPart(acc) / psi.squaredNorm();
}

template <class T>
double entanglementEntropyDense(const Vec<T>& psi, int bond, int numSites) {
  if (bond < 0 || bond >= numSites - 1) throw InvalidArgument("bond out of range");
  Index rightDim = Index{1} << (numSites - bond - 1);
  Index leftDim = Index{1} << (bond + 1);
  // Column-major view: element (c, r) = psi[r * rightDim + c], the transpose of the bipartition.
  Eigen::Map<const Mat<T>> m(psi.data(), rightDim, leftDim);
  Eigen::BDCSVD<Mat<T>> svd(m);
  VecR s = svd.singularValues();
  double total = s.squaredNorm();
  double entropy = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    double p = s(i) * s(i) / total;
    if (p > 0) entropy -= p * std::log(p);
  }
  return std::max(entropy, 0.0);
}

template double expectationDense<double>(const SpinFlipOperator&, const Vec<double>&);
template double expectationDense<cd>(const SpinFlipOperator&, const Vec<cd>&);
template double xxCorrelationDense<double>(const Vec<double>&, int, int, int);
template double xxCorrelationDense<cd>(const Vec<cd>&, int, int, int);
template double entanglementEntropyDense<double>(const Vec<double>&, int, int);
template double entanglementEntropyDense<cd>(const Vec<cd>&, int, int);

Vec<cd> krylovEvolve(const Vec<cd>& psi, const LatticeGeometry& geometry,
                     const FieldSchedule& fieldsAt, double J, double t0, double t1,
                     const KrylovEvolveSettings& settings) {
  if (!(settings.dtMicro > 0)) throw InvalidArgument("dtMicro must be positive");
  if (t1 < t0) throw InvalidArgument("krylovEvolve needs t1 >= t0");
  Vec<cd> state = psi;
  if (t1 == t0) return state;
  auto steps = static_cast<long>(std::ceil((t1 - t0) / settings.dtMicro - 1e-9));
  steps = std::max(steps, 1L);
  double h = (t1 - t0) / static_cast<double>(steps);
  for (long k = 0; k < steps; ++k) {
    double mid = t0 + (static_cast<double>(k) + 0.5) * h;
    std::vector<double> fields = fieldsAt(mid);
    SpinFlipOperator op = tfiOperator(geometry, fields, J);
    LinearMap<cd> apply = [&op](const Vec<cd>& x, Vec<cd>& y) {
      y.resize(x.size());
      kernels::applySpinFlip(op, x.data(), y.data());
    };
    state = krylovExpWithRetry(apply, state, cd(0, -h), settings.krylov);
  }
  return state;
}

// ---------------------------------------------------------------------------
// Free fermions

double pfaffian(MatR a) {
  const Index n = a.rows();
  if (a.cols() != n) throw InvalidArgument("Pfaffian needs a square matrix");
  if ((a + a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("Pfaffian needs an antisymmetric matrix");
  }
  if (n % 2 == 1) return 0.0;
  double pf = 1.0;
  // Parlett-Reid style elimination with partial pivoting.
  for (Index k = 0; k + 1 < n; k += 2) {
    Index kp;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == 0.0) return 0.0;
    pf *= a(k, k + 1);
    if (k + 2 < n) {
      VecR tau = a.row(k).tail(n - k - 2).transpose() / a(k, k + 1);
      VecR col = a.col(k + 1).tail(n - k - 2);
      a.bottomRightCorner(n - k - 2, n - k - 2) += tau * col.transpose() - col * tau.transpose();
    }
  }
  return pf;
}

FreeFermionChain::FreeFermionChain(int length, double g, double J) : length_(length) {
  if (length < 2) throw InvalidArgument("free-fermion chain needs L >= 2");
  if (!(g > 0) || !(J > 0) || !std::isfinite(g) || !std::isfinite(J)) {
    throw InvalidArgument("free-fermion chain needs finite g > 0 and J > 0");
  }
  // H = (i/4) m^T A m with Majoranas a_j = 2j, b_j = 2j+1:
  // Z_j = -i a_j b_j and X_j X_{j+1} = -i b_j a_{j+1}.
  const Index m = 2 * length;
  MatR a = MatR::Zero(m, m);
  for (int j = 0; j < length; ++j) {
    a(2 * j, 2 * j + 1) = 2.0 * J * g;
    a(2 * j + 1, 2 * j) = -2.0 * J * g;
    if (j + 1 < length) {
      a(2 * j + 1, 2 * j + 2) = 2.0 * J;
      a(2 * j + 2, 2 * j + 1) = -2.0 * J;
    }
  }
  Eigen::JacobiSVD<MatR> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  VecR s = svd.singularValues();  // each mode energy appears twice
  std::vector<double> sorted(s.data(), s.data() + s.size());
  std::sort(sorted.begin(), sorted.end());
  modes_.resize(length);
  for (int k = 0; k < length; ++k) modes_(k) = sorted[2 * k];
  e0_ = -0.5 * modes_.sum();
  // Ground state: gamma = A |A|^{-1} = U V^T.
  gamma_ = svd.matrixU() * svd.matrixV().transpose();
}

double FreeFermionChain::correlationXX(int i, int j) const {
  if (i < 0 || j < 0 || i >= length_ || j >= length_) throw InvalidArgument("site out of range");
  if (i == j) return 1.0;
  if (i > j) std::swap(i, j);
  // X_i X_j = prod_{l=i}^{j-1} (-i b_l a_{l+1}); Wick contraction gives a Pfaffian.
  std::vector<Index> idx;
  for (int l = i; l < j; ++l) {
    idx.push_back(2 * l + 1);
    idx.push_back(2 * (l + 1));
  }
  const Index k = static_cast<Index>(idx.size());
  MatR sub(k, k);
  for (Index p = 0; p < k; ++p)
    for (Index q = 0; q < k; ++q) sub(p, q) = gamma_(idx[p], idx[q]);
  MatR antisym = 0.5 * (sub - sub.transpose());
  return pfaffian(antisym);
}

}  // namespace stq
