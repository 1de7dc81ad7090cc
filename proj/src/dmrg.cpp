#include "stq/dmrg.hpp"

#include "stq/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace stq {

void DmrgSettings::validate() const {
  if (chiSchedule.empty()) throw InvalidArgument("chi schedule must not be empty");
  for (Index chi : chiSchedule)
    if (chi < 1) throw InvalidArgument("chi must be >= 1");
  if (cutoff < 0) throw InvalidArgument("cutoff must be >= 0");
  if (maxSweeps < 1) throw InvalidArgument("maxSweeps must be >= 1");
  if (minSweeps < 1 || minSweeps > maxSweeps) throw InvalidArgument("need 1 <= minSweeps <= maxSweeps");
  if (!(energyTol > 0) || !(looseTol > 0) || !(tightTol > 0)) {
    throw InvalidArgument("tolerances must be positive");
  }
  for (double a : noiseSchedule)
    if (a < 0) throw InvalidArgument("noise must be >= 0");
  if (krylovDim < 2) throw InvalidArgument("krylovDim must be >= 2");
}

namespace {

struct Projector {
  const Mps<double>* phi;
  double weight;
  std::vector<MatR> left;   // left[k]: phi^T psi over sites < k (phi bond x psi bond)
  std::vector<MatR> right;  // right[k]: sites >= k (psi bond x phi bond)
};

class Engine {
 public:
  Engine(const Mpo& mpo, Mps<double> psi, const std::vector<PenaltyState>& penalties,
         const DmrgSettings& settings)
      : mpo_(mpo), psi_(std::move(psi)), s_(settings), n_(mpo.size()) {
    for (const auto& p : penalties) {
      if (p.state->size() != n_) throw InvalidArgument("penalty state length mismatch");
      proj_.push_back({p.state, p.weight, {}, {}});
    }
    initEnvironments();
  }

  DmrgResult run() {
    DmrgResult result;
    double previous = 0.0;
    const int finalChiSweep = static_cast<int>(s_.chiSchedule.size()) - 1;
    for (int sweep = 0; sweep < s_.maxSweeps; ++sweep) {
      Index chi = s_.chiSchedule[std::min(sweep, finalChiSweep)];
      double noise = sweep < static_cast<int>(s_.noiseSchedule.size()) ? s_.noiseSchedule[sweep] : 0.0;
      double tol = std::max(s_.tightTol, s_.looseTol * std::pow(1e-2, sweep));
      double maxTrunc = 0.0;
      double energy = 0.0;
      for (int k = 0; k + 1 < n_; ++k) {
        energy = optimize(k, true, chi, noise, tol, maxTrunc);
        updateLeft(k);
      }
      for (int k = n_ - 2; k >= 0; --k) {
        energy = optimize(k, false, chi, noise, tol, maxTrunc);
        updateRight(k + 1);
      }
      psi_.setCenter(0);
      result.log.push_back({sweep, energy, maxTrunc, psi_.maxBondDim(), noise});
      result.sweeps = sweep + 1;

      bool chiSettled = sweep >= finalChiSweep || psi_.maxBondDim() < chi;
      bool quiet = noise == 0.0 && tol <= s_.tightTol;
      double delta = std::abs(energy - previous);
      if (sweep + 1 >= s_.minSweeps && chiSettled && quiet && sweep > 0 &&
          delta < s_.energyTol * std::max(1.0, std::abs(energy))) {
        result.converged = true;
        break;
      }
      previous = energy;
    }
    psi_.setChiMax(s_.chiSchedule.back());
    result.energy = expectation(psi_, mpo_);
    result.state = std::move(psi_);
    return result;
  }

 private:
  void initEnvironments() {
    psi_.canonicalize(0);
    left_.assign(n_ + 1, {});
    right_.assign(n_ + 1, {});
    left_[0] = leftBoundaryEnv<double>();
    right_[n_] = rightBoundaryEnv<double>();
    for (auto& p : proj_) {
      p.left.assign(n_ + 1, MatR());
      p.right.assign(n_ + 1, MatR());
      p.left[0] = MatR::Ones(1, 1);
      p.right[n_] = MatR::Ones(1, 1);
    }
    for (int k = n_ - 1; k >= 1; --k) updateRight(k);
  }

  void updateLeft(int k) {
    const auto& a = psi_.site(k);
    left_[k + 1] = kernels::extendLeft(left_[k], a, mpo_.site(k));
    for (auto& p : proj_) {
      const auto& f = p.phi->site(k);
      MatR e = MatR::Zero(f.right(), a.right());
      for (int s = 0; s < 2; ++s) e.noalias() += f.block(s).transpose() * (p.left[k] * a.block(s));
      p.left[k + 1] = std::move(e);
    }
  }

  void updateRight(int k) {
    const auto& a = psi_.site(k);
    right_[k] = kernels::extendRight(right_[k + 1], a, mpo_.site(k));
    for (auto& p : proj_) {
      const auto& f = p.phi->site(k);
      MatR e = MatR::Zero(a.left(), f.left());
      for (int s = 0; s < 2; ++s) e.noalias() += (a.block(s) * p.right[k + 1]) * f.block(s).transpose();
      p.right[k] = std::move(e);
    }
  }

  // Optimizes sites (k, k+1); the center ends at k+1 when moving right, k otherwise.
  double optimize(int k, bool moveRight, Index chi, double noise, double tol, double& maxTrunc) {
    LocalTensor<double> theta = mergeSites(psi_.site(k), psi_.site(k + 1));
    const Index dl = theta.left();
    const Index dr = theta.right();
    EffectiveMpo w = EffectiveMpo::twoSite(mpo_.site(k), mpo_.site(k + 1));

    std::vector<VecR> targets;
    for (const auto& p : proj_) {
      LocalTensor<double> phi = mergeSites(p.phi->site(k), p.phi->site(k + 1));
      VecR eff(4 * dl * dr);
      for (int s = 0; s < 4; ++s) {
        Eigen::Map<MatR> block(eff.data() + s * dl * dr, dl, dr);
        block.noalias() = p.left[k].transpose() * phi.block(s) * p.right[k + 2].transpose();
      }
      targets.push_back(std::move(eff));
    }

    const Env<double>& left = left_[k];
    const Env<double>& right = right_[k + 2];
    LinearMap<double> apply = [&](const VecR& x, VecR& y) {
      y.resize(x.size());
      kernels::applyEffective(left, w, right, dl, dr, x.data(), y.data());
      for (std::size_t i = 0; i < targets.size(); ++i) {
        y += proj_[i].weight * targets[i].dot(x) * targets[i];
      }
    };
    LanczosSettings ls{s_.krylovDim, s_.maxRestarts, tol};
    EigenPair<double> pair = lanczosLowest<double>(apply, theta.data(), ls);
    theta.data() = pair.vector;

    MatR m = twoSiteMatrix(theta);
    double trunc = 0.0;
    if (noise > 0.0) {
      trunc = splitWithNoise(k, moveRight, m, theta, w, left, right, chi, noise);
    } else {
      SvdResult<double> svd = truncatedSvd(m, {chi, s_.cutoff});
      trunc = svd.discardedWeight;
      double norm = svd.s.norm();
      if (moveRight) {
        psi_.site(k) = LocalTensor<double>::fromLeftMatrix(svd.u, 2);
        MatR rest = (svd.s / norm).asDiagonal() * svd.v.transpose();
        psi_.site(k + 1) = LocalTensor<double>::fromRightMatrix(rest, 2);
      } else {
        MatR rest = svd.u * (svd.s / norm).asDiagonal();
        psi_.site(k) = LocalTensor<double>::fromLeftMatrix(rest, 2);
        psi_.site(k + 1) = LocalTensor<double>::fromRightMatrix(svd.v.transpose(), 2);
      }
    }
    psi_.setCenter(moveRight ? k + 1 : k);
    psi_.addTruncationError(trunc);
    maxTrunc = std::max(maxTrunc, trunc);
    return pair.value;
  }

  // Truncation from the density matrix perturbed by MPO-applied pieces of theta.
  double splitWithNoise(int k, bool moveRight, const MatR& m, const LocalTensor<double>& theta,
                        const EffectiveMpo&, const Env<double>& left, const Env<double>& right,
                        Index chi, double noise) {
    const Index dl = theta.left();
    const Index dr = theta.right();
    MatR rho;
    MatR pert;
    if (moveRight) {
      rho = m * m.transpose();
      pert = MatR::Zero(2 * dl, 2 * dl);
      const MpoSite& wk = mpo_.site(k);
      for (Index b = 0; b < wk.rightDim(); ++b) {
        MatR x = MatR::Zero(2 * dl, 2 * dr);
        for (int s1 = 0; s1 < 2; ++s1)
          for (int sp = 0; sp < 2; ++sp)
            for (Index a = 0; a < wk.leftDim(); ++a) {
              double value = wk.block(s1, sp)(a, b);
              if (value == 0.0) continue;
              for (int s2 = 0; s2 < 2; ++s2) {
                x.block(s1 * dl, s2 * dr, dl, dr).noalias() +=
                    value * left[a] * theta.block(sp * 2 + s2);
              }
            }
        pert.noalias() += x * x.transpose();
      }
    } else {
      rho = m.transpose() * m;
      pert = MatR::Zero(2 * dr, 2 * dr);
      const MpoSite& wk = mpo_.site(k + 1);
      for (Index a = 0; a < wk.leftDim(); ++a) {
        MatR y = MatR::Zero(2 * dl, 2 * dr);
        for (int s2 = 0; s2 < 2; ++s2)
          for (int sp = 0; sp < 2; ++sp)
            for (Index b = 0; b < wk.rightDim(); ++b) {
              double value = wk.block(s2, sp)(a, b);
              if (value == 0.0) continue;
              for (int s1 = 0; s1 < 2; ++s1) {
                y.block(s1 * dl, s2 * dr, dl, dr).noalias() +=
                    value * theta.block(s1 * 2 + sp) * right[b];
              }
            }
        pert.noalias() += y.transpose() * y;
      }
    }
    double pt = pert.trace();
    if (pt > 0) rho += (noise * rho.trace() / pt) * pert;

    Eigen::SelfAdjointEigenSolver<MatR> es(rho);
    const VecR& lambda = es.eigenvalues();  // ascending
    double total = lambda.sum();
    Index keep = 0;
    for (Index i = lambda.size() - 1; i >= 0; --i) {
      if (lambda(i) / total > s_.cutoff) ++keep;
    }
    keep = std::clamp<Index>(std::min(keep, chi), 1, lambda.size());
    MatR basis = es.eigenvectors().rightCols(keep).rowwise().reverse();

    double before = m.squaredNorm();
    if (moveRight) {
      MatR rest = basis.transpose() * m;
      double kept = rest.squaredNorm();
      psi_.site(k) = LocalTensor<double>::fromLeftMatrix(basis, 2);
      psi_.site(k + 1) = LocalTensor<double>::fromRightMatrix(rest / std::sqrt(kept), 2);
      return std::max(0.0, 1.0 - kept / before);
    }
    MatR rest = m * basis;
    double kept = rest.squaredNorm();
    psi_.site(k) = LocalTensor<double>::fromLeftMatrix(rest / std::sqrt(kept), 2);
    psi_.site(k + 1) = LocalTensor<double>::fromRightMatrix(basis.transpose(), 2);
    return std::max(0.0, 1.0 - kept / before);
  }

  const Mpo& mpo_;
  Mps<double> psi_;
  DmrgSettings s_;
  int n_;
  std::vector<Env<double>> left_;
  std::vector<Env<double>> right_;
  std::vector<Projector> proj_;
};

Mps<double> startingState(const Mpo& mpo, const DmrgSettings& settings,
                          const Mps<double>* initialGuess) {
  if (initialGuess) {
    if (initialGuess->size() != mpo.size()) throw InvalidArgument("initial guess length mismatch");
    return *initialGuess;
  }
  std::mt19937_64 rng(settings.seed);
  Index bond = std::min<Index>(settings.chiSchedule.front(), 8);
  return Mps<double>::random(mpo.size(), bond, rng);
}

}  // namespace

DmrgResult lowestWithPenalties(const Mpo& mpo, const DmrgSettings& settings,
                               const std::vector<PenaltyState>& penalties,
                               const Mps<double>* initialGuess) {
  settings.validate();
  if (mpo.size() < 2) throw InvalidArgument("DMRG needs at least two sites");
  Engine engine(mpo, startingState(mpo, settings, initialGuess), penalties, settings);
  return engine.run();
}

DmrgResult groundState(const Mpo& mpo, const DmrgSettings& settings,
                       const Mps<double>* initialGuess) {
  return lowestWithPenalties(mpo, settings, {}, initialGuess);
}

GapResult energyGap(const Mpo& mpo, const DmrgSettings& settings) {
  GapResult out;
  out.ground = groundState(mpo, settings);
  out.e0 = out.ground.energy;

  DmrgSettings excitedSettings = settings;
  excitedSettings.seed = settings.seed + 1;
  // A weight of order |E0| exceeds the gap by a wide margin while keeping the
  // penalized problem well conditioned; it grows if the penalty proves too weak.
  double weight = std::max(1.0, 0.5 * std::abs(out.e0));
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::vector<PenaltyState> penalties{{&out.ground.state, weight}};
    out.excited = lowestWithPenalties(mpo, excitedSettings, penalties);
    out.overlap = std::abs(overlap(out.excited.state, out.ground.state));
    out.penaltyWeight = weight;
    if (out.overlap < 0.5) break;
    weight *= 4.0;
  }
  out.e1 = out.excited.energy;
  out.gap = out.e1 - out.e0;
  out.converged = out.ground.converged && out.excited.converged;
  out.degenerate = out.gap < 10.0 * settings.energyTol * std::max(1.0, std::abs(out.e0));
  return out;
}

Bandwidth spectralBandwidth(const Mpo& mpo, const DmrgSettings& settings) {
  Bandwidth out;
  DmrgResult low = groundState(mpo, settings);
  DmrgResult high = groundState(mpo.scaled(-1.0), settings);
  out.emin = low.energy;
  out.emax = -high.energy;
  out.width = out.emax - out.emin;
  out.converged = low.converged && high.converged;
  return out;
}

}  // namespace stq
