#pragma once

#include "stq/krylov.hpp"
#include "stq/mpo.hpp"
#include "stq/mps.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace stq {

struct DmrgSettings {
  // Bond-dimension cap per sweep; the last entry repeats.
  std::vector<Index> chiSchedule{16, 32, 64, 128, 256, 512};
  double cutoff = 1e-10;
  int maxSweeps = 30;
  int minSweeps = 3;
  // Converged when |E_sweep - E_prev| < energyTol * max(1, |E|).
  double energyTol = 1e-11;
  // Density-matrix noise amplitude per sweep; zero after the schedule ends.
  std::vector<double> noiseSchedule{1e-5, 1e-6, 1e-7};
  // Lanczos residual tolerance: starts at looseTol and tightens to tightTol.
  double looseTol = 1e-6;
  double tightTol = 1e-10;
  int krylovDim = 32;
  int maxRestarts = 6;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SweepLog {
  int sweep = 0;
  double energy = 0.0;
  double maxTruncErr = 0.0;
  Index maxChi = 0;
  double noise = 0.0;
};

struct DmrgResult {
  Mps<double> state;
  double energy = 0.0;
  bool converged = false;
  int sweeps = 0;
  std::vector<SweepLog> log;
};

/// Two-site DMRG for the lowest state of `mpo`. Optional projectors add
/// weight * |phi><phi| penalties (for excited states).
DmrgResult groundState(const Mpo& mpo, const DmrgSettings& settings,
                       const Mps<double>* initialGuess = nullptr);

struct PenaltyState {
  const Mps<double>* state;
  double weight;
};

DmrgResult lowestWithPenalties(const Mpo& mpo, const DmrgSettings& settings,
                               const std::vector<PenaltyState>& penalties,
                               const Mps<double>* initialGuess = nullptr);

struct GapResult {
  double e0 = 0.0;
  double e1 = 0.0;
  double gap = 0.0;
  double overlap = 0.0;  // |<psi1|psi0>|
  double penaltyWeight = 0.0;
  bool degenerate = false;
  bool converged = false;
  DmrgResult ground;
  DmrgResult excited;
};

/// E0, E1 and the gap; E1 from a second run with a penalty on the ground state.
GapResult energyGap(const Mpo& mpo, const DmrgSettings& settings);

struct Bandwidth {
  double emin = 0.0;
  double emax = 0.0;
  double width = 0.0;
  bool converged = false;
};

// Emax from the ground state of -H.
Bandwidth spectralBandwidth(const Mpo& mpo, const DmrgSettings& settings);

}  // namespace stq
