#pragma once

#include "stq/analysis.hpp"
#include "stq/dmrg.hpp"
#include "stq/ed.hpp"
#include "stq/lattice.hpp"
#include "stq/mps.hpp"
#include "stq/tdvp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stq {

enum class FrontKind { Spatiotemporal, Uniform };

struct MeasurementSchedule {
  int scalarEvery = 1;   // grid steps between energy and entropy records
  int localEvery = 10;   // grid steps between eps(x, y) records
  bool correlationsAtEndOnly = true;
  bool averageCorrelationRows = false;  // average C_x over y instead of row 0
  std::vector<double> extraTimes;       // full records at these times too
};

/// Front quench of the cylinder.
///
/// The spatiotemporal front reaches the outermost column at
/// tq = max_i |x_i| / v. The uniform ramp has no such time; it ends at
/// tq = 2 tau, mirroring the start t0 = -2 tau.
struct QuenchProtocol {
  LatticeGeometry geometry{2, 1, false};
  ModelParams model;
  FrontKind front = FrontKind::Spatiotemporal;
  double dt = 0.05;
  // End time; NaN means tq.
  double tEnd = std::numeric_limits<double>::quiet_NaN();
  MeasurementSchedule schedule;

  double t0() const { return model.t0(); }
  double tq() const;
  // The other published convention, Lx / (2 v); recorded for reference only.
  double tqHalfLength() const;
  double endTime() const;
  std::vector<double> fields(double t) const;
  // Pre-quench fields: H(t0), or f = 1 everywhere for the sudden limit tau = 0.
  std::vector<double> prepFields() const;
  void validate() const;
};

// Copy of `protocol` with the uniform ramp (the v = infinity baseline).
QuenchProtocol uniformBaselineProtocol(const QuenchProtocol& protocol);

struct EnergyRecord {
  double t;
  double energy;
  double e0;
  double eps;  // (E - E0) / N
};

struct LocalEnergyRecord {
  double t;
  int column;  // x-bond column (between column and column + 1)
  int row;
  double x;  // bond midpoint coordinate
  double eps;
};

struct CorrelationRecord {
  double t;
  int r;
  double cx;
};

struct EntropyRecord {
  double t;
  int column;
  double x;
  double svn;
};

struct TruncationRecord {
  double t;
  double discardedWeight;  // accumulated
  Index maxChi;
};

struct ObservableSeries {
  double tq = 0.0;
  double tEnd = 0.0;
  bool completed = false;
  std::vector<EnergyRecord> energy;
  std::vector<LocalEnergyRecord> local;
  std::vector<CorrelationRecord> correlations;
  std::vector<EntropyRecord> entropy;
  std::vector<TruncationRecord> truncation;

  // Mean eps(x, y) over the records at time t with |x| <= halfWidth.
  double regionAverage(double t, double halfWidth) const;
  // Records at the last local-energy time.
  std::vector<LocalEnergyRecord> localAt(double t) const;
};

struct QuenchCheckpoint {
  double t = 0.0;
  double gridOrigin = 0.0;
  long steps = 0;
  ObservableSeries partial;
  Mps<cd> state;
};

void saveCheckpoint(const std::string& directory, const QuenchCheckpoint& checkpoint);
QuenchCheckpoint loadCheckpoint(const std::string& directory);

struct QuenchSettings {
  DmrgSettings prep;
  // Warm-started runs for the instantaneous ground state E0(t).
  DmrgSettings instantaneous;
  TdvpSettings tdvp;
  // Directory for the resumable checkpoint; empty disables it.
  std::string checkpointDir;
  int checkpointEvery = 50;  // grid steps
  // Testing hook: stop after this many TDVP steps (negative = no limit).
  long stopAfterSteps = -1;
  std::function<void(double t, const EnergyRecord&)> progress;

  QuenchSettings();
};

// Settings for the E0(t) runs warm-started from the previous ground state:
// no noise, the final bond dimension only, two sweeps minimum.
DmrgSettings warmStartSettings(const DmrgSettings& prep);

/// Prepares the ground state of the pre-quench Hamiltonian and evolves it
/// through the front quench. When `resume` is set, continues from it instead.
/// An interrupted run (step cap or truncation budget) returns completed =
/// false with a checkpoint written at the last grid point.
ObservableSeries runQuench(const QuenchProtocol& protocol, const QuenchSettings& settings,
                           const QuenchCheckpoint* resume = nullptr);

ObservableSeries uniformQuenchBaseline(const QuenchProtocol& protocol,
                                       const QuenchSettings& settings);

/// Same protocol and record times on the full Hilbert space: exact ground
/// states and time-ordered Krylov evolution. N <= kMaxEdSites.
ObservableSeries runQuenchDense(const QuenchProtocol& protocol,
                                const KrylovEvolveSettings& settings);

struct SeriesDeviation {
  double eps = 0.0;
  double energy = 0.0;
  double local = 0.0;
  double correlation = 0.0;
  double entropy = 0.0;
  bool aligned = true;  // same record times and labels

  double max() const;
};

SeriesDeviation compareSeries(const ObservableSeries& a, const ObservableSeries& b);

// ---------------------------------------------------------------------------
// Light cone

enum class KickOperator { X, Z };

struct LightConeSetup {
  LatticeGeometry geometry{2, 1, false};
  double J = 1.0;
  double g = 3.04438;  // static transverse field in units of J
  int kickColumn = -1;  // -1 means Lx / 2
  int kickRow = 0;
  KickOperator kick = KickOperator::X;
  bool applyKick = true;
  double tEnd = 4.0;
  double threshold = 0.02;
  int recordEvery = 1;
};

struct LightConeResult {
  EntropyMap map;
  double origin = 0.0;  // kick x coordinate
  std::optional<VelocityEstimate> velocity;  // empty when no front is found
  std::string frontError;
  double groundEnergy = 0.0;
  EvolveResult evolution;
};

LightConeResult lightConeExperiment(const LightConeSetup& setup, const DmrgSettings& dmrg,
                                    const TdvpSettings& tdvp);

}  // namespace stq
