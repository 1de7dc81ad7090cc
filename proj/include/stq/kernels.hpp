#pragma once

#include "stq/mpo.hpp"
#include "stq/mps.hpp"
#include "stq/types.hpp"

#include <cstdint>
#include <vector>

namespace stq {

// One matrix per MPO channel. Left environments are (bra x ket), right
// environments (ket x bra).
template <class T>
using Env = std::vector<Mat<T>>;

template <class T>
Env<T> leftBoundaryEnv() {
  return Env<T>{Mat<T>::Ones(1, 1)};
}
template <class T>
Env<T> rightBoundaryEnv() {
  return Env<T>{Mat<T>::Ones(1, 1)};
}

/// MPO tensors fused into the operator acting on a local tensor with
/// physical dimension d: d = 2 for one site, 4 for two sites, 1 for a bare
/// bond (zero-site). Only the non-zero entries are kept.
class EffectiveMpo {
 public:
  struct Entry {
    Index a;
    Index b;
    int sp;
    double value;
  };

  static EffectiveMpo oneSite(const MpoSite& w);
  static EffectiveMpo twoSite(const MpoSite& w1, const MpoSite& w2);
  static EffectiveMpo zeroSite(Index bondDim);

  int physDim() const { return d_; }
  Index leftDim() const { return wl_; }
  Index rightDim() const { return wr_; }

  // Entries feeding output physical index s, grouped by left channel a.
  const std::vector<std::vector<Entry>>& rows(int s) const { return rows_[s]; }
  // Whether right channel b is read with input physical index sp.
  bool usesColumn(Index b, int sp) const { return used_[b * d_ + sp] != 0; }

 private:
  EffectiveMpo(int d, Index wl, Index wr, const std::vector<MatR>& blocks);

  int d_ = 0;
  Index wl_ = 0;
  Index wr_ = 0;
  std::vector<std::vector<std::vector<Entry>>> rows_;  // [s][a] -> entries
  std::vector<char> used_;
};

/// Operator of the form  (H x)[b] = diag[b] x[b] + sum_m coef[m] x[b ^ mask[m]]
/// on the 2^N spin basis (bit set = spin down, site 0 most significant).
struct SpinFlipOperator {
  int numSites = 0;
  VecR diagonal;
  std::vector<std::uint64_t> masks;
  std::vector<double> coefs;
};

namespace kernels {

// L'[b] = sum_{a,s,s'} W^{ss'}_{ab} A[s]^dagger L[a] A[s'].
template <class T>
Env<T> extendLeft(const Env<T>& left, const LocalTensor<T>& a, const MpoSite& w);

// R'[a] = sum_{b,s,s'} W^{ss'}_{ab} A[s'] R[b] A[s]^dagger.
template <class T>
Env<T> extendRight(const Env<T>& right, const LocalTensor<T>& a, const MpoSite& w);

// out[s] = sum_{a,b,s'} W^{ss'}_{ab} L[a] in[s'] R[b]; in/out hold d blocks of dl x dr.
template <class T>
void applyEffective(const Env<T>& left, const EffectiveMpo& w, const Env<T>& right, Index dl,
                    Index dr, const T* in, T* out);

template <class T>
void applySpinFlip(const SpinFlipOperator& op, const T* in, T* out);

// Serial, unfused versions of the same contractions. Tests and the benchmark
// compare the parallel kernels against these.
namespace reference {

template <class T>
Env<T> extendLeft(const Env<T>& left, const LocalTensor<T>& a, const MpoSite& w);
template <class T>
Env<T> extendRight(const Env<T>& right, const LocalTensor<T>& a, const MpoSite& w);
template <class T>
void applyEffective(const Env<T>& left, const EffectiveMpo& w, const Env<T>& right, Index dl,
                    Index dr, const T* in, T* out);
template <class T>
void applySpinFlip(const SpinFlipOperator& op, const T* in, T* out);

}  // namespace reference
}  // namespace kernels

// Number of OpenMP threads the kernels run with (fixed per process for
// reproducible output).
void setKernelThreads(int threads);
int kernelThreads();

}  // namespace stq
