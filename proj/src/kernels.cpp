#include "stq/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>

namespace stq {

namespace {
std::atomic<int> gThreads{1};
}

void setKernelThreads(int threads) {
  if (threads < 1) throw InvalidArgument("thread count must be >= 1");
  gThreads = threads;
  omp_set_num_threads(threads);
}

int kernelThreads() { return gThreads.load(); }

// ---------------------------------------------------------------------------
// EffectiveMpo

EffectiveMpo::EffectiveMpo(int d, Index wl, Index wr, const std::vector<MatR>& blocks)
    : d_(d), wl_(wl), wr_(wr) {
  rows_.assign(d, std::vector<std::vector<Entry>>(wl));
  used_.assign(wr * d, 0);
  for (int s = 0; s < d; ++s) {
    for (int sp = 0; sp < d; ++sp) {
      const MatR& w = blocks[s * d + sp];
      for (Index a = 0; a < wl; ++a) {
        for (Index b = 0; b < wr; ++b) {
          double value = w(a, b);
          if (value == 0.0) continue;
          rows_[s][a].push_back({a, b, sp, value});
          used_[b * d + sp] = 1;
        }
      }
    }
  }
}

EffectiveMpo EffectiveMpo::oneSite(const MpoSite& w) {
  std::vector<MatR> blocks(w.w.begin(), w.w.end());
  return EffectiveMpo(2, w.leftDim(), w.rightDim(), blocks);
}

EffectiveMpo EffectiveMpo::twoSite(const MpoSite& w1, const MpoSite& w2) {
  if (w1.rightDim() != w2.leftDim()) throw InvalidArgument("MPO bond mismatch");
  std::vector<MatR> blocks(16);
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      for (int p1 = 0; p1 < 2; ++p1)
        for (int p2 = 0; p2 < 2; ++p2) {
          blocks[(s1 * 2 + s2) * 4 + (p1 * 2 + p2)] = w1.block(s1, p1) * w2.block(s2, p2);
        }
  return EffectiveMpo(4, w1.leftDim(), w2.rightDim(), blocks);
}

EffectiveMpo EffectiveMpo::zeroSite(Index bondDim) {
  std::vector<MatR> blocks{MatR::Identity(bondDim, bondDim)};
  return EffectiveMpo(1, bondDim, bondDim, blocks);
}

namespace kernels {

// Parallel loops only split independent outputs; every reduction runs in a
// fixed serial order, so results do not depend on the thread count.

template <class T>
Env<T> extendLeft(const Env<T>& left, const LocalTensor<T>& a, const MpoSite& w) {
  const Index wl = w.leftDim();
  const Index wr = w.rightDim();
  if (static_cast<Index>(left.size()) != wl) throw InvalidArgument("environment/MPO mismatch");
  const Index dr = a.right();

  std::vector<char> rowUsed(wl, 0);
  for (int k = 0; k < 4; ++k)
    for (Index i = 0; i < wl; ++i)
      if (w.w[k].row(i).cwiseAbs().maxCoeff() > 0) rowUsed[i] = 1;

  // la[a*2+sp] = L[a] A[sp]
  std::vector<Mat<T>> la(wl * 2);
#pragma omp parallel for schedule(static) num_threads(kernelThreads())
  for (Index idx = 0; idx < wl * 2; ++idx) {
    Index ch = idx / 2;
    int sp = static_cast<int>(idx % 2);
    if (rowUsed[ch]) la[idx].noalias() = left[ch] * a.block(sp);
  }

  Env<T> out(wr);
#pragma omp parallel for schedule(dynamic) num_threads(kernelThreads())
  for (Index b = 0; b < wr; ++b) {
    Mat<T> result = Mat<T>::Zero(dr, dr);
    for (int s = 0; s < 2; ++s) {
      Mat<T> acc;
      for (int sp = 0; sp < 2; ++sp) {
        const MatR& wb = w.block(s, sp);
        for (Index ch = 0; ch < wl; ++ch) {
          double value = wb(ch, b);
          if (value == 0.0) continue;
          if (acc.size() == 0) {
            acc = value * la[ch * 2 + sp];
          } else {
            acc += value * la[ch * 2 + sp];
          }
        }
      }
      if (acc.size() != 0) result.noalias() += a.block(s).adjoint() * acc;
    }
    out[b] = std::move(result);
  }
  return out;
}

template <class T>
Env<T> extendRight(const Env<T>& right, const LocalTensor<T>& a, const MpoSite& w) {
  const Index wl = w.leftDim();
  const Index wr = w.rightDim();
  if (static_cast<Index>(right.size()) != wr) throw InvalidArgument("environment/MPO mismatch");
  const Index dl = a.left();

  std::vector<char> colUsed(wr, 0);
  for (int k = 0; k < 4; ++k)
    for (Index j = 0; j < wr; ++j)
      if (w.w[k].col(j).cwiseAbs().maxCoeff() > 0) colUsed[j] = 1;

  // ar[b*2+sp] = A[sp] R[b]
  std::vector<Mat<T>> ar(wr * 2);
#pragma omp parallel for schedule(static) num_threads(kernelThreads())
  for (Index idx = 0; idx < wr * 2; ++idx) {
    Index ch = idx / 2;
    int sp = static_cast<int>(idx % 2);
    if (colUsed[ch]) ar[idx].noalias() = a.block(sp) * right[ch];
  }

  Env<T> out(wl);
#pragma omp parallel for schedule(dynamic) num_threads(kernelThreads())
  for (Index ch = 0; ch < wl; ++ch) {
    Mat<T> result = Mat<T>::Zero(dl, dl);
    for (int s = 0; s < 2; ++s) {
      Mat<T> acc;
      for (int sp = 0; sp < 2; ++sp) {
        const MatR& wb = w.block(s, sp);
        for (Index b = 0; b < wr; ++b) {
          double value = wb(ch, b);
          if (value == 0.0) continue;
          if (acc.size() == 0) {
            acc = value * ar[b * 2 + sp];
          } else {
            acc += value * ar[b * 2 + sp];
          }
        }
      }
      if (acc.size() != 0) result.noalias() += acc * a.block(s).adjoint();
    }
    out[ch] = std::move(result);
  }
  return out;
}

template <class T>
void applyEffective(const Env<T>& left, const EffectiveMpo& w, const Env<T>& right, Index dl,
                    Index dr, const T* in, T* out) {
  const int d = w.physDim();
  const Index wl = w.leftDim();
  const Index wr = w.rightDim();
  const Index blockSize = dl * dr;

  // y[b*d+sp] = in[sp] R[b]
  std::vector<Mat<T>> y(wr * d);
#pragma omp parallel for schedule(static) num_threads(kernelThreads())
  for (Index idx = 0; idx < wr * d; ++idx) {
    Index b = idx / d;
    int sp = static_cast<int>(idx % d);
    if (!w.usesColumn(b, sp)) continue;
    Eigen::Map<const Mat<T>> block(in + sp * blockSize, dl, dr);
    y[idx].noalias() = block * right[b];
  }

  // Each output block s is independent; the channel sum runs serially.
#pragma omp parallel for schedule(dynamic) num_threads(kernelThreads())
  for (int s = 0; s < d; ++s) {
    Eigen::Map<Mat<T>> result(out + s * blockSize, dl, dr);
    result.setZero();
    const auto& rows = w.rows(s);
    Mat<T> acc(dl, dr);
    for (Index ch = 0; ch < wl; ++ch) {
      const auto& entries = rows[ch];
      if (entries.empty()) continue;
      acc.setZero();
      for (const auto& e : entries) acc += e.value * y[e.b * d + e.sp];
      result.noalias() += left[ch] * acc;
    }
  }
}

template <class T>
void applySpinFlip(const SpinFlipOperator& op, const T* in, T* out) {
  const Index dim = op.diagonal.size();
  const std::size_t nm = op.masks.size();
#pragma omp parallel for schedule(static) num_threads(kernelThreads())
  for (Index b = 0; b < dim; ++b) {
    T acc = op.diagonal(b) * in[b];
    const auto ub = static_cast<std::uint64_t>(b);
    for (std::size_t m = 0; m < nm; ++m) acc += op.coefs[m] * in[ub ^ op.masks[m]];
    out[b] = acc;
  }
}

namespace reference {

template <class T>
Env<T> extendLeft(const Env<T>& left, const LocalTensor<T>& a, const MpoSite& w) {
  Env<T> out(w.rightDim(), Mat<T>::Zero(a.right(), a.right()));
  for (Index ch = 0; ch < w.leftDim(); ++ch)
    for (Index b = 0; b < w.rightDim(); ++b)
      for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp) {
          double value = w.block(s, sp)(ch, b);
          if (value != 0.0) out[b] += value * (a.block(s).adjoint() * left[ch] * a.block(sp));
        }
  return out;
}

template <class T>
Env<T> extendRight(const Env<T>& right, const LocalTensor<T>& a, const MpoSite& w) {
  Env<T> out(w.leftDim(), Mat<T>::Zero(a.left(), a.left()));
  for (Index ch = 0; ch < w.leftDim(); ++ch)
    for (Index b = 0; b < w.rightDim(); ++b)
      for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp) {
          double value = w.block(s, sp)(ch, b);
          if (value != 0.0) out[ch] += value * (a.block(sp) * right[b] * a.block(s).adjoint());
        }
  return out;
}

template <class T>
void applyEffective(const Env<T>& left, const EffectiveMpo& w, const Env<T>& right, Index dl,
                    Index dr, const T* in, T* out) {
  const int d = w.physDim();
  const Index blockSize = dl * dr;
  for (int s = 0; s < d; ++s) {
    Eigen::Map<Mat<T>> result(out + s * blockSize, dl, dr);
    result.setZero();
    for (const auto& entries : w.rows(s)) {
      for (const auto& e : entries) {
        Eigen::Map<const Mat<T>> block(in + e.sp * blockSize, dl, dr);
        result += e.value * (left[e.a] * block * right[e.b]);
      }
    }
  }
}

template <class T>
void applySpinFlip(const SpinFlipOperator& op, const T* in, T* out) {
  const Index dim = op.diagonal.size();
  for (Index b = 0; b < dim; ++b) out[b] = op.diagonal(b) * in[b];
  for (std::size_t m = 0; m < op.masks.size(); ++m)
    for (Index b = 0; b < dim; ++b) out[b] += op.coefs[m] * in[static_cast<std::uint64_t>(b) ^ op.masks[m]];
}

}  // namespace reference

#define STQ_INSTANTIATE(NS, T)                                                                 \
  template Env<T> NS::extendLeft<T>(const Env<T>&, const LocalTensor<T>&, const MpoSite&);     \
  template Env<T> NS::extendRight<T>(const Env<T>&, const LocalTensor<T>&, const MpoSite&);    \
  template void NS::applyEffective<T>(const Env<T>&, const EffectiveMpo&, const Env<T>&, Index, \
                                      Index, const T*, T*);                                    \
  template void NS::applySpinFlip<T>(const SpinFlipOperator&, const T*, T*);

}  // namespace kernels

STQ_INSTANTIATE(kernels, double)
STQ_INSTANTIATE(kernels, cd)
STQ_INSTANTIATE(kernels::reference, double)
STQ_INSTANTIATE(kernels::reference, cd)

#undef STQ_INSTANTIATE

}  // namespace stq
