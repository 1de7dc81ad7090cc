#pragma once

#include "stq/dmrg.hpp"
#include "stq/heatwave.hpp"
#include "stq/quench.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stq {

// Malformed run configuration: unknown key, bad value, inconsistent settings.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// A run would exceed a resource cap (memory estimate, bond dimension budget).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "section.key = value" configuration. Lines starting with '#' are
/// comments. Every key must be known; see RunConfig::knownKeys().
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::string& path);

  // Later assignments win; used for command-line overrides.
  void set(const std::string& key, const std::string& value);
  // "key=value"
  void setAssignment(const std::string& assignment);

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  // model
  double J = 1.0;
  std::optional<double> gc;  // empty: pseudoCriticalField(Ly)
  double hFactor = 5.0;
  std::optional<double> h;   // explicit h overrides hFactor * gc
  // geometry
  int ly = 2;
  std::optional<int> lx;     // empty: aspect * Ly
  int aspect = 8;
  bool yPeriodic = true;
  // quench
  double v = 2.0;            // +inf selects the uniform ramp
  double tau = 0.4;
  double dt = 0.05;
  int order = 4;
  std::optional<double> tEnd;
  // mps / tdvp
  Index chiMax = 512;
  double cutoff = 1e-10;
  TdvpMode mode = TdvpMode::TwoSite;
  double truncationBudget = 1e-3;
  // dmrg
  std::vector<Index> chiSchedule;  // empty: 16, 32, ... up to chiMax
  int maxSweeps = 30;
  int minSweeps = 3;
  double energyTol = 1e-11;
  std::vector<double> noise{1e-5, 1e-6, 1e-7};
  // schedule
  int scalarEvery = 1;
  int localEvery = 10;
  bool correlationsAtEndOnly = true;
  bool averageCorrelationRows = false;
  std::vector<double> extraTimes;
  int checkpointEvery = 50;
  // statics (gs, gap, oracle-check): fields g in units of J; empty means gc
  std::vector<double> staticFields;
  // light cone
  std::optional<double> lightconeG;
  int kickColumn = -1;
  int kickRow = 0;
  KickOperator kick = KickOperator::X;
  double lightconeTEnd = 4.0;
  double lightconeThreshold = 0.02;
  // heatwave
  double heatwaveC = 3.06;
  double heatwaveM = 1.0;
  std::optional<double> heatwaveL;  // empty: Ly
  std::vector<double> heatwaveVelocities;
  int heatwavePoints = 201;
  // collapse
  std::string collapseKind = "energy";  // energy | gap | correlation
  std::vector<std::string> collapseInputs;
  std::vector<double> collapseSpeeds;   // c(Ly) per input Ly, overrides light-cone runs
  double regionFraction = 0.25;         // central region |x| <= fraction * Lx
  double collapseNuStart = 0.629971;    // gap fit start; gc starts at model.gc
  // output and resources
  std::string outputRoot;  // empty: $STQ_OUTPUT_ROOT, else "runs"
  std::string outputName;  // run directory name under the root
  std::uint64_t seed = 1;
  double memoryCapMb = 0.0;  // 0: physical memory
  bool enforceMemoryCap = true;

  static RunConfig fromKeyValues(const KeyValueFile& file);
  static const std::vector<std::string>& knownKeys();

  int resolvedLx() const { return lx.value_or(aspect * ly); }
  double resolvedGc() const;
  double resolvedH() const;
  LatticeGeometry geometry() const;
  ModelParams model() const;
  QuenchProtocol protocol() const;
  DmrgSettings dmrg() const;
  TdvpSettings tdvp() const;
  QuenchSettings quenchSettings() const;
  LightConeSetup lightCone() const;
  HeatwaveParams heatwave() const;
  std::vector<double> fieldsForStatics() const;

  void validate() const;
  // Every key with its resolved value, defaults filled in.
  std::map<std::string, std::string> resolved() const;
};

/// Rough peak memory of a two-site sweep: MPS, environments and Krylov
/// vectors at bond dimension chi on the snake MPO of width Ly + 2.
double estimateMemoryMb(int numSites, int ly, Index chi, int krylovDim);

struct MemoryCheck {
  double estimateMb = 0.0;
  double capMb = 0.0;
  bool overCap = false;
};

// Throws ResourceError when over the cap and the cap is enforced.
MemoryCheck checkMemory(const RunConfig& config);

// Shortest round-trip decimal form of a double.
std::string formatDouble(double value);

}  // namespace stq
