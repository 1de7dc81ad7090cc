#include "stq/mps.hpp"

#include "stq/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace stq {

// ---------------------------------------------------------------------------
// LocalTensor

template <class T>
Mat<T> LocalTensor<T>::leftMatrix() const {
  Mat<T> m(d_ * left_, right_);
  for (int s = 0; s < d_; ++s) m.middleRows(s * left_, left_) = block(s);
  return m;
}

template <class T>
LocalTensor<T> LocalTensor<T>::fromLeftMatrix(const Mat<T>& m, int d) {
  if (m.rows() % d != 0) throw InvalidArgument("left matrix rows not divisible by d");
  LocalTensor t(d, m.rows() / d, m.cols());
  for (int s = 0; s < d; ++s) t.block(s) = m.middleRows(s * t.left(), t.left());
  return t;
}

template <class T>
LocalTensor<T> LocalTensor<T>::fromRightMatrix(const Mat<T>& m, int d) {
  if (m.cols() % d != 0) throw InvalidArgument("right matrix cols not divisible by d");
  LocalTensor t(d, m.rows(), m.cols() / d);
  std::copy(m.data(), m.data() + m.size(), t.data().data());
  return t;
}

template <class T>
LocalTensor<T> mergeSites(const LocalTensor<T>& a, const LocalTensor<T>& b) {
  if (a.right() != b.left()) throw InvalidArgument("bond mismatch in mergeSites");
  LocalTensor<T> theta(a.physDim() * b.physDim(), a.left(), b.right());
  for (int s1 = 0; s1 < a.physDim(); ++s1)
    for (int s2 = 0; s2 < b.physDim(); ++s2)
      theta.block(s1 * b.physDim() + s2).noalias() = a.block(s1) * b.block(s2);
  return theta;
}

template <class T>
Mat<T> twoSiteMatrix(const LocalTensor<T>& theta) {
  if (theta.physDim() != 4) throw InvalidArgument("twoSiteMatrix needs a two-site tensor");
  const Index dl = theta.left();
  const Index dr = theta.right();
  Mat<T> m(2 * dl, 2 * dr);
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2) m.block(s1 * dl, s2 * dr, dl, dr) = theta.block(s1 * 2 + s2);
  return m;
}

// ---------------------------------------------------------------------------
// SVD

namespace {

// Eigen 3.4's divide-and-conquer SVD occasionally returns factors that do not
// reproduce the input (relative error ~1e-3 seen on 16x24 blocks). Check and
// fall back to one-sided Jacobi, which is slower but reliable.
template <class T>
struct ThinSvd {
  Mat<T> u;
  Mat<T> v;
  VecR s;
};

template <class T>
ThinSvd<T> thinSvd(const Mat<T>& matrix) {
  const int options = Eigen::ComputeThinU | Eigen::ComputeThinV;
  Eigen::BDCSVD<Mat<T>> bdc(matrix, options);
  ThinSvd<T> out{bdc.matrixU(), bdc.matrixV(), bdc.singularValues()};
  double err = (out.u * out.s.template cast<T>().asDiagonal() * out.v.adjoint() - matrix).norm();
  if (err <= 1e-12 * matrix.norm()) return out;
  Eigen::JacobiSVD<Mat<T>> jac(matrix, options);
  return {jac.matrixU(), jac.matrixV(), jac.singularValues()};
}

}  // namespace

template <class T>
SvdResult<T> truncatedSvd(const Mat<T>& matrix, const TruncationParams& params) {
  if (params.chiMax < 1) throw InvalidArgument("chiMax must be >= 1");
  if (params.cutoff < 0) throw InvalidArgument("cutoff must be >= 0");
  if (!matrix.allFinite()) throw InvalidArgument("SVD of a non-finite matrix");

  SvdResult<T> out;
  if (matrix.rows() == 0 || matrix.cols() == 0 || matrix.norm() == 0.0) {
    out.u = Mat<T>::Zero(matrix.rows(), 1);
    out.v = Mat<T>::Zero(matrix.cols(), 1);
    if (matrix.rows() > 0) out.u(0, 0) = T(1);
    if (matrix.cols() > 0) out.v(0, 0) = T(1);
    out.s = VecR::Zero(1);
    out.zeroMatrix = true;
    return out;
  }

  ThinSvd<T> svd = thinSvd(matrix);
  const VecR& s = svd.s;
  double total = s.squaredNorm();
  Index keep = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) * s(i) / total > params.cutoff) keep = i + 1;
  }
  keep = std::clamp<Index>(std::min(keep, params.chiMax), 1, s.size());
  double discarded = s.tail(s.size() - keep).squaredNorm() / total;

  out.u = svd.u.leftCols(keep);
  out.v = svd.v.leftCols(keep);
  out.s = s.head(keep);
  out.discardedWeight = discarded;
  return out;
}

// ---------------------------------------------------------------------------
// Mps

template <class T>
Mps<T>::Mps(std::vector<LocalTensor<T>> sites, int center) : sites_(std::move(sites)), center_(center) {
  if (sites_.empty()) throw InvalidArgument("MPS needs at least one site");
  if (sites_.front().left() != 1 || sites_.back().right() != 1) {
    throw InvalidArgument("MPS boundary bonds must have dimension 1");
  }
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) {
    if (sites_[i].right() != sites_[i + 1].left()) throw InvalidArgument("MPS bond mismatch");
  }
  if (center_ >= size()) throw InvalidArgument("center out of range");
}

template <class T>
Mps<T> Mps<T>::product(std::span<const std::array<T, 2>> local) {
  std::vector<LocalTensor<T>> sites;
  for (const auto& amp : local) {
    LocalTensor<T> t(2, 1, 1);
    t.block(0)(0, 0) = amp[0];
    t.block(1)(0, 0) = amp[1];
    sites.push_back(std::move(t));
  }
  Mps out(std::move(sites));
  out.normalize();
  return out;
}

template <class T>
Mps<T> Mps<T>::allUp(int n) {
  std::vector<std::array<T, 2>> local(n, {T(1), T(0)});
  return product(local);
}

template <class T>
Mps<T> Mps<T>::random(int n, Index bond, std::mt19937_64& rng) {
  if (n < 1 || bond < 1) throw InvalidArgument("random MPS needs n >= 1 and bond >= 1");
  std::normal_distribution<double> gauss;
  std::vector<LocalTensor<T>> sites;
  Index left = 1;
  for (int i = 0; i < n; ++i) {
    // Cap by the exact Schmidt rank so that no bond is redundant.
    double toLeft = std::pow(2.0, i + 1);
    double toRight = std::pow(2.0, n - i - 1);
    Index right = (i == n - 1) ? 1
                               : static_cast<Index>(std::min<double>({static_cast<double>(bond),
                                                                      toLeft, toRight}));
    LocalTensor<T> t(2, left, right);
    for (Index k = 0; k < t.data().size(); ++k) {
      if constexpr (std::is_same_v<T, double>) {
        t.data()(k) = gauss(rng);
      } else {
        double re = gauss(rng);
        double im = gauss(rng);
        t.data()(k) = cd(re, im);
      }
    }
    sites.push_back(std::move(t));
    left = right;
  }
  Mps out(std::move(sites));
  out.canonicalize(0);
  out.normalize();
  return out;
}

template <class T>
Index Mps<T>::maxBondDim() const {
  Index m = 1;
  for (const auto& s : sites_) m = std::max(m, s.right());
  return m;
}

namespace {

// Left-orthogonalizes site i and pushes the remainder into site i+1.
template <class T>
void shiftRight(std::vector<LocalTensor<T>>& sites, int i) {
  Mat<T> m = sites[i].leftMatrix();
  Eigen::HouseholderQR<Mat<T>> qr(m);
  Index k = std::min(m.rows(), m.cols());
  Mat<T> q = qr.householderQ() * Mat<T>::Identity(m.rows(), k);
  Mat<T> r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  sites[i] = LocalTensor<T>::fromLeftMatrix(q, sites[i].physDim());
  LocalTensor<T>& next = sites[i + 1];
  LocalTensor<T> updated(next.physDim(), k, next.right());
  for (int s = 0; s < next.physDim(); ++s) updated.block(s).noalias() = r * next.block(s);
  next = std::move(updated);
}

// Right-orthogonalizes site i and pushes the remainder into site i-1.
template <class T>
void shiftLeft(std::vector<LocalTensor<T>>& sites, int i) {
  Mat<T> mdag = sites[i].rightMatrix().adjoint();
  Eigen::HouseholderQR<Mat<T>> qr(mdag);
  Index k = std::min(mdag.rows(), mdag.cols());
  Mat<T> q = qr.householderQ() * Mat<T>::Identity(mdag.rows(), k);
  Mat<T> r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  sites[i] = LocalTensor<T>::fromRightMatrix(q.adjoint(), sites[i].physDim());
  LocalTensor<T>& prev = sites[i - 1];
  LocalTensor<T> updated(prev.physDim(), prev.left(), k);
  Mat<T> rdag = r.adjoint();
  for (int s = 0; s < prev.physDim(); ++s) updated.block(s).noalias() = prev.block(s) * rdag;
  prev = std::move(updated);
}

}  // namespace

template <class T>
void Mps<T>::canonicalize(int c) {
  if (c < 0 || c >= size()) throw InvalidArgument("center out of range");
  for (int i = 0; i < c; ++i) shiftRight(sites_, i);
  for (int i = size() - 1; i > c; --i) shiftLeft(sites_, i);
  center_ = c;
}

template <class T>
void Mps<T>::moveCenter(int c) {
  if (c < 0 || c >= size()) throw InvalidArgument("center out of range");
  if (center_ < 0) {
    canonicalize(c);
    return;
  }
  while (center_ < c) {
    shiftRight(sites_, center_);
    ++center_;
  }
  while (center_ > c) {
    shiftLeft(sites_, center_);
    --center_;
  }
}

template <class T>
double Mps<T>::norm() const {
  if (center_ >= 0) return sites_[center_].data().norm();
  return std::sqrt(std::abs(overlap(*this, *this)));
}

template <class T>
void Mps<T>::normalize() {
  if (center_ < 0) canonicalize(0);
  double n = sites_[center_].data().norm();
  if (!(n > 0) || !std::isfinite(n)) throw InvalidArgument("cannot normalize a zero state");
  sites_[center_].data() /= n;
}

// ---------------------------------------------------------------------------
// Dense conversions

template <class T>
Vec<T> toDense(const Mps<T>& mps) {
  if (mps.size() > 24) throw InvalidArgument("dense conversion limited to 24 sites");
  Mat<T> psi = Mat<T>::Ones(1, 1);
  for (int k = 0; k < mps.size(); ++k) {
    const auto& a = mps.site(k);
    Mat<T> next(psi.rows() * 2, a.right());
    for (int s = 0; s < 2; ++s) {
      Mat<T> part = psi * a.block(s);
      for (Index r = 0; r < psi.rows(); ++r) next.row(2 * r + s) = part.row(r);
    }
    psi = std::move(next);
  }
  return psi.col(0);
}

template <class T>
Mps<T> fromDense(const Vec<T>& psi, int n, const TruncationParams& params) {
  if (n < 1 || psi.size() != (Index(1) << n)) throw InvalidArgument("dense vector size mismatch");
  std::vector<LocalTensor<T>> sites;
  // rest: (current left bond) x (remaining basis states), remaining site k most significant.
  Mat<T> rest = Eigen::Map<const Mat<T>>(psi.data(), 1, psi.size());
  double discarded = 0.0;
  for (int k = 0; k < n - 1; ++k) {
    Index dl = rest.rows();
    Index tail = rest.cols() / 2;
    Mat<T> m(2 * dl, tail);
    for (int s = 0; s < 2; ++s) m.middleRows(s * dl, dl) = rest.middleCols(s * tail, tail);
    SvdResult<T> svd = truncatedSvd(m, params);
    discarded += svd.discardedWeight;
    sites.push_back(LocalTensor<T>::fromLeftMatrix(svd.u, 2));
    rest = svd.s.asDiagonal() * svd.v.adjoint();
  }
  LocalTensor<T> last(2, rest.rows(), 1);
  for (int s = 0; s < 2; ++s) last.block(s) = rest.col(s);
  sites.push_back(std::move(last));
  Mps<T> out(std::move(sites), n - 1);
  out.setTruncationError(discarded);
  return out;
}

Mps<cd> toComplex(const Mps<double>& mps) {
  std::vector<LocalTensor<cd>> sites;
  for (const auto& a : mps.sites()) {
    LocalTensor<cd> t(a.physDim(), a.left(), a.right());
    t.data() = a.data().cast<cd>();
    sites.push_back(std::move(t));
  }
  Mps<cd> out(std::move(sites), mps.center());
  out.setTruncationError(mps.truncationError());
  out.setChiMax(mps.chiMax());
  return out;
}

template <class T>
T overlap(const Mps<T>& bra, const Mps<T>& ket) {
  if (bra.size() != ket.size()) throw InvalidArgument("overlap of MPS with different lengths");
  Mat<T> e = Mat<T>::Ones(1, 1);
  for (int k = 0; k < bra.size(); ++k) {
    const auto& a = bra.site(k);
    const auto& b = ket.site(k);
    Mat<T> next = Mat<T>::Zero(a.right(), b.right());
    for (int s = 0; s < a.physDim(); ++s) next.noalias() += a.block(s).adjoint() * (e * b.block(s));
    e = std::move(next);
  }
  return e(0, 0);
}

template <class T>
double expectation(const Mps<T>& mps, const Mpo& mpo) {
  if (mps.size() != mpo.size()) throw InvalidArgument("MPS/MPO length mismatch");
  Env<T> env = leftBoundaryEnv<T>();
  for (int k = 0; k < mps.size(); ++k) env = kernels::extendLeft(env, mps.site(k), mpo.site(k));
  double n2 = std::real(overlap(mps, mps));
  return realPart(env[0](0, 0)) / n2;
}

// ---------------------------------------------------------------------------
// Local expectation values

namespace {

template <class T>
Op2<T> castOperator(const Op2<cd>& op) {
  if constexpr (std::is_same_v<T, double>) {
    if (op.imag().cwiseAbs().maxCoeff() > 0.0) {
      throw InvalidArgument("complex operator applied to a real MPS");
    }
    return op.real();
  } else {
    return op;
  }
}

template <class T>
Mat<T> transferWithOperator(const Mat<T>& e, const LocalTensor<T>& a, const Op2<T>& op) {
  Mat<T> ea[2] = {e * a.block(0), e * a.block(1)};
  Mat<T> out = Mat<T>::Zero(a.right(), a.right());
  for (int s = 0; s < 2; ++s) {
    Mat<T> mixed = op(s, 0) * ea[0] + op(s, 1) * ea[1];
    out.noalias() += a.block(s).adjoint() * mixed;
  }
  return out;
}

}  // namespace

template <class T>
NormEnvironments<T>::NormEnvironments(const Mps<T>& mps) : mps_(&mps) {
  int n = mps.size();
  left_.resize(n + 1);
  right_.resize(n + 1);
  left_[0] = Mat<T>::Ones(1, 1);
  for (int k = 0; k < n; ++k) {
    const auto& a = mps.site(k);
    left_[k + 1] = Mat<T>::Zero(a.right(), a.right());
    for (int s = 0; s < 2; ++s) left_[k + 1].noalias() += a.block(s).adjoint() * left_[k] * a.block(s);
  }
  right_[n] = Mat<T>::Ones(1, 1);
  for (int k = n - 1; k >= 0; --k) {
    const auto& a = mps.site(k);
    right_[k] = Mat<T>::Zero(a.left(), a.left());
    for (int s = 0; s < 2; ++s) right_[k].noalias() += a.block(s) * right_[k + 1] * a.block(s).adjoint();
  }
  normSq_ = realPart(left_[n](0, 0));
  if (!(normSq_ > 0)) throw InvalidArgument("zero-norm MPS");
}

template <class T>
T NormEnvironments<T>::productExpectation(std::span<const SiteOperator> factors) const {
  if (factors.empty()) return T(1);
  std::vector<SiteOperator> sorted(factors.begin(), factors.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const SiteOperator& a, const SiteOperator& b) { return a.site < b.site; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].site < 0 || sorted[i].site >= mps_->size()) {
      throw InvalidArgument("operator site out of range");
    }
    if (i > 0 && sorted[i].site == sorted[i - 1].site) {
      throw InvalidArgument("repeated site in operator product");
    }
  }
  int first = sorted.front().site;
  int last = sorted.back().site;
  Mat<T> e = left_[first];
  std::size_t next = 0;
  const Op2<T> eye = identity2<T>();
  for (int k = first; k <= last; ++k) {
    if (next < sorted.size() && sorted[next].site == k) {
      e = transferWithOperator(e, mps_->site(k), castOperator<T>(sorted[next].op));
      ++next;
    } else {
      e = transferWithOperator(e, mps_->site(k), eye);
    }
  }
  T value = (e.cwiseProduct(right_[last + 1].transpose())).sum();
  return value / normSq_;
}

template <class T>
double NormEnvironments<T>::expectation(const PauliSum& terms) const {
  double total = 0.0;
  std::vector<SiteOperator> factors;
  for (const auto& term : terms) {
    factors.clear();
    for (const auto& f : term.factors) factors.push_back({f.site, pauliMatrix<cd>(f.op)});
    total += term.coef * realPart(productExpectation(factors));
  }
  return total;
}

template <class T>
double expectation(const Mps<T>& mps, const PauliSum& terms) {
  return NormEnvironments<T>(mps).expectation(terms);
}

template <class T>
T twoPointCorrelation(const Mps<T>& mps, const Op2<cd>& opA, int siteA, const Op2<cd>& opB,
                      int siteB) {
  if (siteA == siteB) throw InvalidArgument("two-point correlation needs distinct sites");
  if (siteA < 0 || siteB < 0 || siteA >= mps.size() || siteB >= mps.size()) {
    throw InvalidArgument("site out of range");
  }
  NormEnvironments<T> env(mps);
  std::array<SiteOperator, 2> factors{SiteOperator{siteA, opA}, SiteOperator{siteB, opB}};
  return env.productExpectation(factors);
}

// ---------------------------------------------------------------------------
// Entanglement

template <class T>
VecR bondSpectrum(Mps<T>& mps, int bond) {
  if (bond < 0 || bond >= mps.size() - 1) throw InvalidArgument("bond out of range");
  mps.moveCenter(bond);
  VecR s = thinSvd<T>(mps.site(bond).leftMatrix()).s;
  double n = s.norm();
  if (!(n > 0)) throw InvalidArgument("zero-norm MPS");
  return s / n;
}

double vonNeumannEntropy(const VecR& schmidt) {
  double total = schmidt.squaredNorm();
  if (!(total > 0)) throw InvalidArgument("empty Schmidt spectrum");
  double s = 0.0;
  for (Index i = 0; i < schmidt.size(); ++i) {
    double p = schmidt(i) * schmidt(i) / total;
    if (p > 0) s -= p * std::log(p);
  }
  return std::max(s, 0.0);
}

template <class T>
double entanglementEntropy(Mps<T>& mps, int bond) {
  return vonNeumannEntropy(bondSpectrum(mps, bond));
}

template <class T>
std::vector<double> entanglementEntropies(Mps<T>& mps) {
  int n = mps.size();
  std::vector<double> out;
  if (n < 2) return out;
  mps.moveCenter(0);
  const TruncationParams lossless{std::numeric_limits<Index>::max(), 0.0};
  for (int b = 0; b < n - 1; ++b) {
    auto& a = mps.site(b);
    SvdResult<T> svd = truncatedSvd<T>(a.leftMatrix(), lossless);
    out.push_back(vonNeumannEntropy(svd.s));
    a = LocalTensor<T>::fromLeftMatrix(svd.u, a.physDim());
    Mat<T> sv = svd.s.asDiagonal() * svd.v.adjoint();
    auto& next = mps.site(b + 1);
    LocalTensor<T> updated(next.physDim(), sv.rows(), next.right());
    for (int s = 0; s < next.physDim(); ++s) updated.block(s).noalias() = sv * next.block(s);
    next = std::move(updated);
    mps.setCenter(b + 1);
  }
  return out;
}

template <class T>
std::vector<double> entanglementEntropiesRightSweep(Mps<T>& mps) {
  int n = mps.size();
  std::vector<double> out(std::max(n - 1, 0));
  if (n < 2) return out;
  mps.moveCenter(n - 1);
  const TruncationParams lossless{std::numeric_limits<Index>::max(), 0.0};
  for (int b = n - 2; b >= 0; --b) {
    auto& a = mps.site(b + 1);
    SvdResult<T> svd = truncatedSvd<T>(Mat<T>(a.rightMatrix()), lossless);
    out[b] = vonNeumannEntropy(svd.s);
    a = LocalTensor<T>::fromRightMatrix(svd.v.adjoint(), a.physDim());
    Mat<T> us = svd.u * svd.s.asDiagonal();
    auto& prev = mps.site(b);
    LocalTensor<T> updated(prev.physDim(), prev.left(), us.cols());
    for (int s = 0; s < prev.physDim(); ++s) updated.block(s).noalias() = prev.block(s) * us;
    prev = std::move(updated);
    mps.setCenter(b);
  }
  return out;
}

template <class T>
void applyLocalOperator(Mps<T>& mps, const Op2<T>& op, int site) {
  if (site < 0 || site >= mps.size()) throw InvalidArgument("site out of range");
  mps.moveCenter(site);
  auto& a = mps.site(site);
  LocalTensor<T> updated(2, a.left(), a.right());
  for (int s = 0; s < 2; ++s) updated.block(s) = op(s, 0) * a.block(0) + op(s, 1) * a.block(1);
  double n = updated.data().norm();
  if (!(n > 1e-300)) throw InvalidArgument("local operator annihilates the state");
  updated.data() /= n;
  a = std::move(updated);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'S', 'T', 'Q', 'M', 'P', 'S', '\0', '\0'};

template <class V>
void put(std::ostream& out, const V& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <class V>
V get(std::istream& in) {
  V value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(V));
  if (!in) throw InvalidArgument("truncated MPS checkpoint");
  return value;
}

template <class T>
Mps<T> readSites(std::istream& in, std::uint64_t n, std::int64_t center) {
  std::vector<LocalTensor<T>> sites;
  for (std::uint64_t k = 0; k < n; ++k) {
    auto d = get<std::uint32_t>(in);
    auto left = get<std::uint64_t>(in);
    auto right = get<std::uint64_t>(in);
    if (d < 1 || d > 4 || left > (1u << 20) || right > (1u << 20)) {
      throw InvalidArgument("corrupt MPS checkpoint dimensions");
    }
    LocalTensor<T> t(static_cast<int>(d), static_cast<Index>(left), static_cast<Index>(right));
    for (std::uint32_t s = 0; s < d; ++s)
      for (Index l = 0; l < t.left(); ++l)
        for (Index r = 0; r < t.right(); ++r) t.block(s)(l, r) = get<T>(in);
    sites.push_back(std::move(t));
  }
  return Mps<T>(std::move(sites), static_cast<int>(center));
}

}  // namespace

template <class T>
void writeMps(std::ostream& out, const Mps<T>& mps) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, std::is_same_v<T, double> ? 0u : 1u);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(mps.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(mps.chiMax()));
  put<std::int64_t>(out, mps.center());
  put<double>(out, mps.truncationError());
  for (const auto& t : mps.sites()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.physDim()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.left()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.right()));
    for (int s = 0; s < t.physDim(); ++s)
      for (Index l = 0; l < t.left(); ++l)
        for (Index r = 0; r < t.right(); ++r) put<T>(out, t.block(s)(l, r));
  }
  if (!out) throw std::runtime_error("failed to write MPS checkpoint");
}

AnyMps readMps(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw InvalidArgument("not an MPS checkpoint");
  }
  auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw InvalidArgument("MPS checkpoint version " + std::to_string(version) +
                          " needs migration to version " + std::to_string(kCheckpointVersion));
  }
  auto scalar = get<std::uint32_t>(in);
  auto n = get<std::uint64_t>(in);
  auto chi = get<std::uint64_t>(in);
  auto center = get<std::int64_t>(in);
  auto truncErr = get<double>(in);
  if (n < 1 || n > (1u << 16)) throw InvalidArgument("corrupt MPS checkpoint length");
  auto finish = [&](auto mps) -> AnyMps {
    mps.setChiMax(static_cast<Index>(chi));
    mps.setTruncationError(truncErr);
    return mps;
  };
  if (scalar == 0) return finish(readSites<double>(in, n, center));
  if (scalar == 1) return finish(readSites<cd>(in, n, center));
  throw InvalidArgument("unknown scalar type in MPS checkpoint");
}

template <class T>
void saveMps(const std::string& path, const Mps<T>& mps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  writeMps(out, mps);
}

AnyMps loadMps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return readMps(in);
}

// ---------------------------------------------------------------------------

#define STQ_INSTANTIATE(T)                                                                      \
  template class LocalTensor<T>;                                                                \
  template LocalTensor<T> mergeSites<T>(const LocalTensor<T>&, const LocalTensor<T>&);          \
  template Mat<T> twoSiteMatrix<T>(const LocalTensor<T>&);                                      \
  template SvdResult<T> truncatedSvd<T>(const Mat<T>&, const TruncationParams&);                \
  template class Mps<T>;                                                                        \
  template Vec<T> toDense<T>(const Mps<T>&);                                                    \
  template Mps<T> fromDense<T>(const Vec<T>&, int, const TruncationParams&);                    \
  template T overlap<T>(const Mps<T>&, const Mps<T>&);                                          \
  template double expectation<T>(const Mps<T>&, const Mpo&);                                    \
  template class NormEnvironments<T>;                                                           \
  template double expectation<T>(const Mps<T>&, const PauliSum&);                               \
  template T twoPointCorrelation<T>(const Mps<T>&, const Op2<cd>&, int, const Op2<cd>&, int);   \
  template VecR bondSpectrum<T>(Mps<T>&, int);                                                  \
  template double entanglementEntropy<T>(Mps<T>&, int);                                         \
  template std::vector<double> entanglementEntropies<T>(Mps<T>&);                               \
  template std::vector<double> entanglementEntropiesRightSweep<T>(Mps<T>&);                     \
  template void applyLocalOperator<T>(Mps<T>&, const Op2<T>&, int);                             \
  template void writeMps<T>(std::ostream&, const Mps<T>&);                                      \
  template void saveMps<T>(const std::string&, const Mps<T>&);

STQ_INSTANTIATE(double)
STQ_INSTANTIATE(cd)

#undef STQ_INSTANTIATE

}  // namespace stq
