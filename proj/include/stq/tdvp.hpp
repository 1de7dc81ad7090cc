#pragma once

#include "stq/krylov.hpp"
#include "stq/mpo.hpp"
#include "stq/mps.hpp"

#include <functional>
#include <limits>
#include <span>

namespace stq {

enum class TdvpMode { TwoSite, OneSite };

struct TdvpSettings {
  double dt = 0.05;
  int order = 4;
  TruncationParams truncation{512, 1e-10};
  KrylovExpSettings krylov{30, 1e-12};
  TdvpMode mode = TdvpMode::TwoSite;
  // evolve() stops early once the accumulated discarded weight exceeds this.
  double truncationBudget = 1e-3;

  void validate() const;
};

// Hamiltonian MPO at time t.
using MpoProvider = std::function<Mpo(double t)>;

struct StepStats {
  double discardedWeight = 0.0;
  Index maxChi = 0;
};

// Triple-jump weights of the fourth-order composition.
struct TripleJump {
  static double w1() { return 1.0 / (2.0 - std::cbrt(2.0)); }
  static double w2() { return 1.0 - 2.0 * w1(); }
};

/// One symmetric second-order TDVP step from t to t+dt: a left-to-right and
/// a right-to-left half sweep under H(t + dt/2). The state must be
/// normalized; its center is moved to site 0 first and ends there.
StepStats step2(Mps<cd>& psi, const MpoProvider& mpoAt, double t, double dt,
                const TdvpSettings& settings);

// Composition step2(w1 dt), step2(w2 dt), step2(w1 dt).
StepStats step4(Mps<cd>& psi, const MpoProvider& mpoAt, double t, double dt,
                const TdvpSettings& settings);

// step2 or step4 according to settings.order.
StepStats step(Mps<cd>& psi, const MpoProvider& mpoAt, double t, double dt,
               const TdvpSettings& settings);

/// Called at t0 and after every step. `scheduled` marks the requested
/// measurement times.
using TdvpObserver = std::function<void(double t, const Mps<cd>& psi, bool scheduled)>;

struct EvolveResult {
  double tReached = 0.0;
  bool completed = false;
  int steps = 0;
  double discardedWeight = 0.0;
  Index maxChi = 0;
};

struct EvolveOptions {
  // Step grid origin; NaN means t0. A resumed run passes its original start
  // so the steps stay on the same grid.
  double gridOrigin = std::numeric_limits<double>::quiet_NaN();
  // Stop (completed = false) after this many steps; negative means no limit.
  long maxSteps = -1;
  bool observeStart = true;
};

/// Evolves from t0 to tEnd on the grid origin + k dt, shortening a step where
/// needed to land exactly on each measurement time.
EvolveResult evolve(Mps<cd>& psi, const MpoProvider& mpoAt, double t0, double tEnd,
                    std::span<const double> measureTimes, const TdvpSettings& settings,
                    const TdvpObserver& observer, const EvolveOptions& options = {});

}  // namespace stq
