#pragma once

#include "stq/types.hpp"

#include <functional>
#include <span>

namespace stq {

// y = H x for a Hermitian operator given only through its action.
template <class T>
using LinearMap = std::function<void(const Vec<T>& x, Vec<T>& y)>;

struct LanczosSettings {
  int krylovDim = 40;
  int maxRestarts = 20;
  double tol = 1e-10;  // target residual norm ||H x - E x||
};

template <class T>
struct EigenPair {
  double value = 0.0;
  Vec<T> vector;
  double residual = 0.0;
  int matvecs = 0;
  bool converged = false;
};

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
///
/// Vectors in `deflate` (orthonormal) are projected out of every Krylov
/// vector, which yields the lowest state of the orthogonal complement.
template <class T>
EigenPair<T> lanczosLowest(const LinearMap<T>& apply, const Vec<T>& start,
                           const LanczosSettings& settings,
                           std::span<const Vec<T>> deflate = {});

struct KrylovExpSettings {
  int maxDim = 60;
  double tol = 1e-13;  // estimated error of the propagated (normalized) vector
};

struct KrylovExpResult {
  Vec<cd> vector;
  double errorEstimate = 0.0;
  int dim = 0;
};

// exp(z H) v for Hermitian H. Throws ConvergenceError when maxDim is not
// enough to reach the tolerance.
KrylovExpResult krylovExp(const LinearMap<cd>& apply, const Vec<cd>& v, cd z,
                          const KrylovExpSettings& settings);

// Same, but on failure retries once as two half steps before giving up.
Vec<cd> krylovExpWithRetry(const LinearMap<cd>& apply, const Vec<cd>& v, cd z,
                           const KrylovExpSettings& settings);

}  // namespace stq
