#pragma once

#include "stq/lattice.hpp"
#include "stq/mpo.hpp"
#include "stq/types.hpp"

#include <iosfwd>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace stq {

/// Tensor with one physical index of dimension d and two bond indices,
/// stored as d contiguous column-major (left x right) blocks.
template <class T>
class LocalTensor {
 public:
  LocalTensor() = default;
  LocalTensor(int d, Index left, Index right)
      : d_(d), left_(left), right_(right), data_(Vec<T>::Zero(d * left * right)) {}

  int physDim() const { return d_; }
  Index left() const { return left_; }
  Index right() const { return right_; }

  Eigen::Map<Mat<T>> block(int s) { return {data_.data() + s * left_ * right_, left_, right_}; }
  Eigen::Map<const Mat<T>> block(int s) const {
    return {data_.data() + s * left_ * right_, left_, right_};
  }

  Vec<T>& data() { return data_; }
  const Vec<T>& data() const { return data_; }

  // (d*left) x right with rows ordered (s, alpha).
  Mat<T> leftMatrix() const;
  // left x (d*right) with columns ordered (s, beta); identical memory layout.
  Eigen::Map<const Mat<T>> rightMatrix() const { return {data_.data(), left_, d_ * right_}; }

  static LocalTensor fromLeftMatrix(const Mat<T>& m, int d);
  static LocalTensor fromRightMatrix(const Mat<T>& m, int d);

 private:
  int d_ = 2;
  Index left_ = 0;
  Index right_ = 0;
  Vec<T> data_;
};

// Two-site tensor with physical index s1 * 2 + s2.
template <class T>
LocalTensor<T> mergeSites(const LocalTensor<T>& a, const LocalTensor<T>& b);
// (2 left) x (2 right) matrix of a two-site tensor, rows (s1, alpha), cols (s2, beta).
template <class T>
Mat<T> twoSiteMatrix(const LocalTensor<T>& theta);

struct TruncationParams {
  Index chiMax = 512;
  double cutoff = 1e-10;
};

template <class T>
struct SvdResult {
  Mat<T> u;                 // rows x k, orthonormal columns
  VecR s;                   // k singular values, non-increasing
  Mat<T> v;                 // cols x k, orthonormal columns (matrix = u diag(s) v^dagger)
  double discardedWeight = 0.0;
  bool zeroMatrix = false;
};

// Keeps min(chiMax, #{s : s^2 / sum s^2 > cutoff}) values (at least one).
template <class T>
SvdResult<T> truncatedSvd(const Mat<T>& matrix, const TruncationParams& params);

/// Finite matrix-product state on spin-1/2 sites.
///
/// `center` is the orthogonality center when the state is in mixed-canonical
/// form (sites left of it left-isometric, right of it right-isometric), or -1
/// when unknown.
template <class T>
class Mps {
 public:
  using Scalar = T;

  Mps() = default;
  explicit Mps(std::vector<LocalTensor<T>> sites, int center = -1);

  static Mps product(std::span<const std::array<T, 2>> local);
  static Mps allUp(int n);
  static Mps random(int n, Index bond, std::mt19937_64& rng);

  int size() const { return static_cast<int>(sites_.size()); }
  const LocalTensor<T>& site(int i) const { return sites_[i]; }
  LocalTensor<T>& site(int i) { return sites_[i]; }
  const std::vector<LocalTensor<T>>& sites() const { return sites_; }

  // Dimension of the bond between site b and b+1.
  Index bondDim(int b) const { return sites_[b].right(); }
  Index maxBondDim() const;

  int center() const { return center_; }
  void setCenter(int c) { center_ = c; }

  double truncationError() const { return truncErr_; }
  void addTruncationError(double w) { truncErr_ += w; }
  void setTruncationError(double w) { truncErr_ = w; }

  Index chiMax() const { return chiMax_; }
  void setChiMax(Index chi) { chiMax_ = chi; }

  // Full QR sweeps bringing the center to `c`.
  void canonicalize(int c);
  // Moves an existing center; canonicalizes first if the center is unknown.
  void moveCenter(int c);

  double norm() const;
  void normalize();

 private:
  std::vector<LocalTensor<T>> sites_;
  int center_ = -1;
  double truncErr_ = 0.0;
  Index chiMax_ = 512;
};

// Conversions and dense helpers (dense index: site 0 most significant bit,
// bit value 1 = spin down).
template <class T>
Vec<T> toDense(const Mps<T>& mps);
template <class T>
Mps<T> fromDense(const Vec<T>& psi, int n, const TruncationParams& params = {1 << 20, 1e-26});
Mps<cd> toComplex(const Mps<double>& mps);

template <class T>
T overlap(const Mps<T>& bra, const Mps<T>& ket);

// <psi|O|psi> / <psi|psi>.
template <class T>
double expectation(const Mps<T>& mps, const Mpo& mpo);

struct SiteOperator {
  int site;
  Op2<cd> op;
};

/// Left/right norm environments of an MPS for repeated local expectation
/// values. left(k) contracts sites < k, right(k) sites >= k.
template <class T>
class NormEnvironments {
 public:
  explicit NormEnvironments(const Mps<T>& mps);

  double normSquared() const { return normSq_; }

  // <psi| prod_k op_k |psi> / <psi|psi>; factors may come in any order.
  T productExpectation(std::span<const SiteOperator> factors) const;
  double expectation(const PauliSum& terms) const;

 private:
  const Mps<T>* mps_;
  std::vector<Mat<T>> left_;
  std::vector<Mat<T>> right_;
  double normSq_ = 1.0;
};

template <class T>
double expectation(const Mps<T>& mps, const PauliSum& terms);

template <class T>
T twoPointCorrelation(const Mps<T>& mps, const Op2<cd>& opA, int siteA, const Op2<cd>& opB,
                      int siteB);

// Schmidt values across bond b (between site b and b+1); moves the center.
template <class T>
VecR bondSpectrum(Mps<T>& mps, int bond);

double vonNeumannEntropy(const VecR& schmidt);

template <class T>
double entanglementEntropy(Mps<T>& mps, int bond);

// Entropies at every bond, from one left-to-right sweep (center ends at N-1).
template <class T>
std::vector<double> entanglementEntropies(Mps<T>& mps);
// The same values from a right-to-left sweep (center ends at 0).
template <class T>
std::vector<double> entanglementEntropiesRightSweep(Mps<T>& mps);

// Applies op at `site` and restores unit norm; throws on a zero result.
template <class T>
void applyLocalOperator(Mps<T>& mps, const Op2<T>& op, int site);

// ---------------------------------------------------------------------------
// Binary checkpoint: header (magic, version, N, chi, center, scalar type,
// truncation error) followed by per-site dims and row-major (s, left, right)
// data. Round trips are bit exact.

using AnyMps = std::variant<Mps<double>, Mps<cd>>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void writeMps(std::ostream& out, const Mps<T>& mps);
AnyMps readMps(std::istream& in);

template <class T>
void saveMps(const std::string& path, const Mps<T>& mps);
AnyMps loadMps(const std::string& path);

}  // namespace stq
