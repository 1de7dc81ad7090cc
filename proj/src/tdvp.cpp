#include "stq/tdvp.hpp"

#include "stq/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace stq {

void TdvpSettings::validate() const {
  if (!(dt > 0)) throw InvalidArgument("dt must be > 0");
  if (order != 2 && order != 4) throw InvalidArgument("order must be 2 or 4");
  if (truncation.chiMax < 1) throw InvalidArgument("chiMax must be >= 1");
  if (truncation.cutoff < 0) throw InvalidArgument("cutoff must be >= 0");
  if (krylov.maxDim < 2 || !(krylov.tol > 0)) throw InvalidArgument("bad Krylov settings");
  if (!(truncationBudget > 0)) throw InvalidArgument("truncation budget must be > 0");
}

namespace {

class Sweeper {
 public:
  Sweeper(Mps<cd>& psi, const Mpo& mpo, const TdvpSettings& settings)
      : psi_(psi), mpo_(mpo), s_(settings), n_(psi.size()) {
    if (mpo.size() != n_) throw InvalidArgument("MPO/MPS length mismatch");
    psi_.moveCenter(0);
    left_.assign(n_ + 1, {});
    right_.assign(n_ + 1, {});
    left_[0] = leftBoundaryEnv<cd>();
    right_[n_] = rightBoundaryEnv<cd>();
    for (int k = n_ - 1; k >= 1; --k) updateRight(k);
  }

  // Both half sweeps with time step tau each (tau = dt/2).
  StepStats run(double tau) {
    if (n_ == 1) {
      evolveSite(0, tau * 2.0);
      stats_.maxChi = 1;
      return stats_;
    }
    if (s_.mode == TdvpMode::TwoSite) {
      for (int k = 0; k + 1 < n_; ++k) {
        evolvePair(k, tau, true);
        updateLeft(k);
        if (k + 2 < n_) evolveSite(k + 1, -tau);
      }
      for (int k = n_ - 2; k >= 0; --k) {
        evolvePair(k, tau, false);
        updateRight(k + 1);
        if (k > 0) evolveSite(k, -tau);
      }
    } else {
      for (int k = 0; k < n_; ++k) {
        evolveSite(k, tau);
        if (k + 1 < n_) shiftRightEvolve(k, tau);
      }
      for (int k = n_ - 1; k >= 0; --k) {
        evolveSite(k, tau);
        if (k > 0) shiftLeftEvolve(k, tau);
      }
    }
    psi_.setCenter(0);
    stats_.maxChi = psi_.maxBondDim();
    return stats_;
  }

 private:
  void updateLeft(int k) { left_[k + 1] = kernels::extendLeft(left_[k], psi_.site(k), mpo_.site(k)); }
  void updateRight(int k) {
    right_[k] = kernels::extendRight(right_[k + 1], psi_.site(k), mpo_.site(k));
  }

  Vec<cd> propagate(const Env<cd>& left, const EffectiveMpo& w, const Env<cd>& right, Index dl,
                    Index dr, const Vec<cd>& v, double tau) {
    LinearMap<cd> apply = [&](const Vec<cd>& x, Vec<cd>& y) {
      y.resize(x.size());
      kernels::applyEffective(left, w, right, dl, dr, x.data(), y.data());
    };
    return krylovExpWithRetry(apply, v, cd(0.0, -tau), s_.krylov);
  }

  // exp(-i tau H_eff) on site k (the center).
  void evolveSite(int k, double tau) {
    LocalTensor<cd>& a = psi_.site(k);
    EffectiveMpo w = EffectiveMpo::oneSite(mpo_.site(k));
    a.data() = propagate(left_[k], w, right_[k + 1], a.left(), a.right(), a.data(), tau);
  }

  void evolvePair(int k, double tau, bool moveRight) {
    LocalTensor<cd> theta = mergeSites(psi_.site(k), psi_.site(k + 1));
    EffectiveMpo w = EffectiveMpo::twoSite(mpo_.site(k), mpo_.site(k + 1));
    theta.data() =
        propagate(left_[k], w, right_[k + 2], theta.left(), theta.right(), theta.data(), tau);
    SvdResult<cd> svd = truncatedSvd(twoSiteMatrix(theta), s_.truncation);
    double norm = svd.s.norm();
    if (moveRight) {
      psi_.site(k) = LocalTensor<cd>::fromLeftMatrix(svd.u, 2);
      Mat<cd> rest = (svd.s / norm).cast<cd>().asDiagonal() * svd.v.adjoint();
      psi_.site(k + 1) = LocalTensor<cd>::fromRightMatrix(rest, 2);
    } else {
      Mat<cd> rest = svd.u * (svd.s / norm).cast<cd>().asDiagonal();
      psi_.site(k) = LocalTensor<cd>::fromLeftMatrix(rest, 2);
      psi_.site(k + 1) = LocalTensor<cd>::fromRightMatrix(svd.v.adjoint(), 2);
    }
    psi_.addTruncationError(svd.discardedWeight);
    stats_.discardedWeight += svd.discardedWeight;
  }

  // QR of site k, backward evolution of the bond matrix, absorbed into k+1.
  void shiftRightEvolve(int k, double tau) {
    LocalTensor<cd>& a = psi_.site(k);
    Mat<cd> m = a.leftMatrix();
    Eigen::HouseholderQR<Mat<cd>> qr(m);
    Index r = std::min(m.rows(), m.cols());
    Mat<cd> q = qr.householderQ() * Mat<cd>::Identity(m.rows(), r);
    Mat<cd> c = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    a = LocalTensor<cd>::fromLeftMatrix(q, 2);
    updateLeft(k);
    c = evolveBond(k, c, -tau);
    LocalTensor<cd>& next = psi_.site(k + 1);
    LocalTensor<cd> updated(2, c.rows(), next.right());
    for (int s = 0; s < 2; ++s) updated.block(s).noalias() = c * next.block(s);
    next = std::move(updated);
  }

  void shiftLeftEvolve(int k, double tau) {
    LocalTensor<cd>& a = psi_.site(k);
    Mat<cd> mdag = a.rightMatrix().adjoint();
    Eigen::HouseholderQR<Mat<cd>> qr(mdag);
    Index r = std::min(mdag.rows(), mdag.cols());
    Mat<cd> q = qr.householderQ() * Mat<cd>::Identity(mdag.rows(), r);
    Mat<cd> c = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    c.adjointInPlace();
    a = LocalTensor<cd>::fromRightMatrix(q.adjoint(), 2);
    updateRight(k);
    c = evolveBond(k - 1, c, -tau);
    LocalTensor<cd>& prev = psi_.site(k - 1);
    LocalTensor<cd> updated(2, prev.left(), c.cols());
    for (int s = 0; s < 2; ++s) updated.block(s).noalias() = prev.block(s) * c;
    prev = std::move(updated);
  }

  // Bond matrix between sites k and k+1.
  Mat<cd> evolveBond(int k, const Mat<cd>& c, double tau) {
    EffectiveMpo w = EffectiveMpo::zeroSite(mpo_.site(k).rightDim());
    Vec<cd> v = Eigen::Map<const Vec<cd>>(c.data(), c.size());
    Vec<cd> out = propagate(left_[k + 1], w, right_[k + 1], c.rows(), c.cols(), v, tau);
    return Eigen::Map<const Mat<cd>>(out.data(), c.rows(), c.cols());
  }

  Mps<cd>& psi_;
  const Mpo& mpo_;
  const TdvpSettings& s_;
  int n_;
  std::vector<Env<cd>> left_;
  std::vector<Env<cd>> right_;
  StepStats stats_;
};

}  // namespace

StepStats step2(Mps<cd>& psi, const MpoProvider& mpoAt, double t, double dt,
                const TdvpSettings& settings) {
  Mpo mpo = mpoAt(t + 0.5 * dt);
  Sweeper sweeper(psi, mpo, settings);
  return sweeper.run(0.5 * dt);
}

StepStats step4(Mps<cd>& psi, const MpoProvider& mpoAt, double t, double dt,
                const TdvpSettings& settings) {
  const double w[3] = {TripleJump::w1(), TripleJump::w2(), TripleJump::w1()};
  StepStats total;
  double tSub = t;
  for (double wk : w) {
    StepStats s = step2(psi, mpoAt, tSub, wk * dt, settings);
    total.discardedWeight += s.discardedWeight;
    total.maxChi = std::max(total.maxChi, s.maxChi);
    tSub += wk * dt;
  }
  return total;
}

StepStats step(Mps<cd>& psi, const MpoProvider& mpoAt, double t, double dt,
               const TdvpSettings& settings) {
  return settings.order == 4 ? step4(psi, mpoAt, t, dt, settings)
                             : step2(psi, mpoAt, t, dt, settings);
}

EvolveResult evolve(Mps<cd>& psi, const MpoProvider& mpoAt, double t0, double tEnd,
                    std::span<const double> measureTimes, const TdvpSettings& settings,
                    const TdvpObserver& observer, const EvolveOptions& options) {
  settings.validate();
  if (tEnd < t0) throw InvalidArgument("tEnd before t0");
  std::vector<double> targets(measureTimes.begin(), measureTimes.end());
  std::sort(targets.begin(), targets.end());
  // Times closer than this are treated as equal.
  const double eps = 1e-9 * std::max(1.0, settings.dt);

  EvolveResult result;
  result.tReached = t0;
  result.maxChi = psi.maxBondDim();
  auto next = targets.begin();
  while (next != targets.end() && *next < t0 - eps) ++next;
  auto isScheduled = [&](double t) {
    if (next != targets.end() && std::abs(*next - t) <= eps) {
      ++next;
      return true;
    }
    return false;
  };
  bool startScheduled = isScheduled(t0);
  if (observer && options.observeStart) observer(t0, psi, startScheduled);

  double t = t0;
  // Steps are counted from the origin so that the grid does not drift.
  const double origin = std::isnan(options.gridOrigin) ? t0 : options.gridOrigin;
  if (origin > t0 + eps) throw InvalidArgument("grid origin after t0");
  long gridIndex = static_cast<long>(std::floor((t0 - origin) / settings.dt + 1e-9));
  while (t < tEnd - eps) {
    if (options.maxSteps >= 0 && result.steps >= options.maxSteps) return result;
    double gridNext = origin + (gridIndex + 1) * settings.dt;
    if (gridNext <= t + eps) {
      ++gridIndex;
      continue;
    }
    double target = std::min(gridNext, tEnd);
    if (next != targets.end() && *next < target - eps) target = *next;
    StepStats s = step(psi, mpoAt, t, target - t, settings);
    t = std::abs(target - gridNext) <= eps ? gridNext : target;
    if (std::abs(t - gridNext) <= eps) ++gridIndex;
    ++result.steps;
    result.discardedWeight += s.discardedWeight;
    result.maxChi = std::max(result.maxChi, s.maxChi);
    result.tReached = t;
    if (observer) observer(t, psi, isScheduled(t));
    if (result.discardedWeight > settings.truncationBudget) return result;
  }
  result.completed = true;
  return result;
}

}  // namespace stq
