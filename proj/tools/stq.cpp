#include "stq/analysis.hpp"
#include "stq/config.hpp"
#include "stq/dmrg.hpp"
#include "stq/ed.hpp"
#include "stq/heatwave.hpp"
#include "stq/kernels.hpp"
#include "stq/quench.hpp"
#include "stq/store.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

using namespace stq;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kConvergence = 3, kResource = 4 };

struct Common {
  std::string configPath;
  std::vector<std::string> overrides;
  std::string outputDir;
  int threads = 1;
  bool quiet = false;
};

RunConfig loadConfig(const Common& common) {
  KeyValueFile file =
      common.configPath.empty() ? KeyValueFile{} : KeyValueFile::load(common.configPath);
  for (const auto& o : common.overrides) file.setAssignment(o);
  return RunConfig::fromKeyValues(file);
}

void note(const Common& common, const std::string& text) {
  if (!common.quiet) std::cerr << text << '\n';
}

// One run directory: lock, outputs, manifest.
class Run {
 public:
  Run(const Common& common, const RunConfig& config, const std::string& command)
      : dir_(common.outputDir.empty() ? runDirectory(config, command) : common.outputDir),
        lock_(dir_),
        start_(std::chrono::steady_clock::now()) {
    manifest_.command = command;
    manifest_.config = config;
    manifest_.threads = common.threads;
  }

  const std::string& dir() const { return dir_; }
  RunManifest& manifest() { return manifest_; }

  void write(const std::string& name, const CsvTable& table) {
    fs::path p = fs::path(dir_) / name;
    fs::create_directories(p.parent_path());
    writeCsv(p.string(), table);
    manifest_.addFile(dir_, name);
  }
  void list(const std::string& name) { manifest_.addFile(dir_, name); }
  void flag(const std::string& name, bool value) { manifest_.flags.push_back({name, value}); }
  void value(const std::string& name, double v) { manifest_.summary.push_back({name, v}); }

  void finish() {
    manifest_.wallSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    writeManifest(dir_, manifest_);
  }

 private:
  std::string dir_;
  RunLock lock_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

std::vector<double> staticFields(const RunConfig& c, double g) {
  return std::vector<double>(c.resolvedLx() * c.ly, c.J * g);
}

void warnMemory(const Common& common, const RunConfig& config) {
  MemoryCheck m = checkMemory(config);
  if (m.overCap) {
    note(common, "warning: projected memory " + std::to_string(static_cast<long>(m.estimateMb)) +
                     " MB exceeds the cap of " + std::to_string(static_cast<long>(m.capMb)) + " MB");
  }
}

// ---------------------------------------------------------------------------

int runGs(const Common& common, const RunConfig& c) {
  warnMemory(common, c);
  Run run(common, c, "gs");
  LatticeGeometry geo = c.geometry();
  CsvTable t{"gs", "g [J], E0 [J], e0 [J per site], svn_mid [nats], chi [bond dimension]",
             {"g", "E0", "e0", "svn_mid", "chi"}, {}};
  bool allConverged = true;
  for (double g : c.fieldsForStatics()) {
    auto f = staticFields(c, g);
    DmrgResult r = groundState(buildHamiltonianMpo(geo, f, c.J), c.dmrg());
    allConverged = allConverged && r.converged;
    double svn = geo.size() > 1 ? entanglementEntropy(r.state, geo.size() / 2 - 1) : 0.0;
    t.addRow({g, r.energy, r.energy / geo.size(), svn, static_cast<double>(r.state.maxBondDim())});
    note(common, "g = " + formatDouble(g) + "  E0 = " + formatDouble(r.energy));
  }
  run.write("gs.csv", t);
  run.value("E0", t.rows.front()[1]);
  run.flag("converged", allConverged);
  run.finish();
  std::printf("E0 = %.15g\n", t.rows.front()[1]);
  return allConverged ? kOk : kConvergence;
}

int runGap(const Common& common, const RunConfig& c) {
  warnMemory(common, c);
  Run run(common, c, "gap");
  LatticeGeometry geo = c.geometry();
  CsvTable t{"gap", "Ly [sites], g [J], E0 [J], E1 [J], gap [J], degenerate [0/1]",
             {"Ly", "g", "E0", "E1", "gap", "degenerate"}, {}};
  bool allConverged = true;
  for (double g : c.fieldsForStatics()) {
    GapResult r = energyGap(buildHamiltonianMpo(geo, staticFields(c, g), c.J), c.dmrg());
    allConverged = allConverged && r.converged;
    t.addRow({static_cast<double>(c.ly), g, r.e0, r.e1, r.gap, r.degenerate ? 1.0 : 0.0});
    note(common, "g = " + formatDouble(g) + "  gap = " + formatDouble(r.gap));
  }
  run.write("gap.csv", t);
  run.flag("converged", allConverged);
  run.finish();
  return allConverged ? kOk : kConvergence;
}

CsvTable deviationTable(const SeriesDeviation& d) {
  CsvTable t{"deviation", "max absolute deviation per observable",
             {"eps", "energy", "local", "correlation", "entropy", "max"}, {}};
  t.addRow({d.eps, d.energy, d.local, d.correlation, d.entropy, d.max()});
  return t;
}

int runQuenchCommand(const Common& common, const RunConfig& c, bool oracle, bool resume) {
  warnMemory(common, c);
  QuenchProtocol p = c.protocol();
  p.validate();
  if (oracle && p.geometry.size() > kMaxEdSites) {
    throw ConfigError("--oracle needs N <= " + std::to_string(kMaxEdSites));
  }
  Run run(common, c, "quench");
  QuenchSettings s = c.quenchSettings();
  s.checkpointDir = (fs::path(run.dir()) / "checkpoint").string();
  if (!common.quiet) {
    s.progress = [](double t, const EnergyRecord& e) {
      std::fprintf(stderr, "t = %.4f  eps = %.6e\n", t, e.eps);
    };
  }
  std::optional<QuenchCheckpoint> cp;
  if (resume && fs::exists(fs::path(s.checkpointDir) / "cursor.json")) {
    cp = loadCheckpoint(s.checkpointDir);
    note(common, "resuming at t = " + formatDouble(cp->t));
  }
  ObservableSeries series = runQuench(p, s, cp ? &*cp : nullptr);
  for (const auto& name : writeSeries(run.dir(), series)) run.list(name);
  run.flag("completed", series.completed);
  // The checkpoint only matters for an unfinished run.
  if (series.completed) fs::remove_all(s.checkpointDir);
  run.value("tq", series.tq);
  if (!series.energy.empty()) {
    run.value("epsFinal", series.energy.back().eps);
    run.value("epsRegionFinal", series.regionAverage(series.energy.back().t,
                                                     c.regionFraction * c.resolvedLx()));
  }
  if (!series.truncation.empty()) run.value("discardedWeight", series.truncation.back().discardedWeight);

  if (oracle) {
    KrylovEvolveSettings ks;
    ks.dtMicro = std::min(ks.dtMicro, c.dt / 10.0);
    ObservableSeries dense = runQuenchDense(p, ks);
    fs::path sub = fs::path(run.dir()) / "oracle";
    for (const auto& name : writeSeries(sub.string(), dense)) run.list("oracle/" + name);
    SeriesDeviation d = compareSeries(series, dense);
    run.write("deviation.csv", deviationTable(d));
    run.value("oracleDeviation", d.max());
    run.flag("oracleAligned", d.aligned);
    run.flag("oracleWithin1e-6", d.aligned && d.max() < 1e-6);
    std::printf("oracle deviation: eps %.3e  local %.3e  cx %.3e  svn %.3e  max %.3e\n", d.eps,
                d.local, d.correlation, d.entropy, d.max());
  }
  run.finish();
  return series.completed ? kOk : kResource;
}

int runLightcone(const Common& common, const RunConfig& c) {
  warnMemory(common, c);
  Run run(common, c, "lightcone");
  LightConeResult r = lightConeExperiment(c.lightCone(), c.dmrg(), c.tdvp());
  CsvTable t{"entropy", "t [1/J], xbond [lattice constants], svn [nats]", {"t", "xbond", "svn"}, {}};
  for (std::size_t i = 0; i < r.map.times.size(); ++i)
    for (std::size_t b = 0; b < r.map.bondX.size(); ++b)
      t.addRow({r.map.times[i], r.map.bondX[b], r.map.entropy(i, b)});
  run.write("entropy.csv", t);
  run.value("groundEnergy", r.groundEnergy);
  run.value("origin", r.origin);
  run.flag("completed", r.evolution.completed);
  run.flag("frontFound", r.velocity.has_value());
  if (r.velocity) {
    run.value("c", r.velocity->c);
    run.value("cUncertainty", r.velocity->uncertainty);
    CsvTable front{"front", "t [1/J], x [lattice constants from the kick]", {"t", "x"}, {}};
    for (std::size_t i = 0; i < r.velocity->frontTimes.size(); ++i)
      front.addRow({r.velocity->frontTimes[i], r.velocity->frontPositions[i]});
    run.write("front.csv", front);
    std::printf("c = %.6g +- %.2g\n", r.velocity->c, r.velocity->uncertainty);
  } else {
    note(common, "no front: " + r.frontError);
  }
  run.finish();
  if (!r.evolution.completed) return kResource;
  return r.velocity ? kOk : kConvergence;
}

int runHeatwave(const Common& common, const RunConfig& c) {
  HeatwaveParams hp = c.heatwave();
  if (!(hp.v > hp.c) || std::isinf(hp.v)) throw ConfigError("heatwave needs c < quench.v < inf");
  hp.validate();
  QuenchProtocol p = c.protocol();
  double tq = p.tq();
  Run run(common, c, "heatwave");
  double half = 0.5 * c.resolvedLx();
  std::vector<double> grid(c.heatwavePoints);
  for (int i = 0; i < c.heatwavePoints; ++i) grid[i] = -half + 2.0 * half * i / (c.heatwavePoints - 1);
  auto eps = spatialEnergyProfile(grid, tq, hp);
  double hot = heatwaveDensity(hotPlateauCenter(tq, hp), tq, hp);
  CsvTable profile{"heatwave_profile", "x [lattice constants], eps_th [J per site], eps_norm [hot plateau = 1]",
                   {"x", "eps_th", "eps_norm"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i) profile.addRow({grid[i], eps[i], eps[i] / hot});
  run.write("heatwave_profile.csv", profile);
  run.value("tq", tq);
  run.value("etaFactorPrediction", etaFactorPrediction(hp));
  run.value("coldOverHot", heatwaveDensity(0.0, tq, hp) / hot);
  if (!c.heatwaveVelocities.empty()) {
    auto points = energyVsVelocity(c.heatwaveVelocities, hp, c.resolvedLx(),
                                   c.regionFraction * c.resolvedLx());
    CsvTable vt{"heatwave_velocity", "v [lattice constants / (1/J)], system [J per site], region [J per site]",
                {"v", "system", "region"}, {}};
    for (const auto& pt : points) vt.addRow({pt.v, pt.systemAverage, pt.regionAverage});
    run.write("heatwave_velocity.csv", vt);
  }
  run.finish();
  std::printf("cold/hot = %.6g  eta-factor prediction = %.6g\n",
              heatwaveDensity(0.0, tq, hp) / hot, etaFactorPrediction(hp));
  return kOk;
}

// ---------------------------------------------------------------------------
// collapse

struct InputRun {
  std::string dir;
  nlohmann::json manifest;
  std::string command() const { return manifest.at("command").get<std::string>(); }
  int ly() const { return manifest.at("derived").at("Ly").get<int>(); }
  int lx() const { return manifest.at("derived").at("Lx").get<int>(); }
  // Finite-size scale: Ly on a cylinder, the length of a chain.
  double size() const { return ly() > 1 ? ly() : lx(); }
  std::string key(const std::string& k) const {
    return manifest.at("config").at(k).get<std::string>();
  }
};

InputRun openInput(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw ConfigError("collapse input without manifest: " + dir);
  return {dir, nlohmann::json::parse(in)};
}

int runCollapse(const Common& common, const RunConfig& c) {
  if (c.collapseInputs.empty()) throw ConfigError("collapse.inputs is empty");
  std::vector<InputRun> inputs;
  for (const auto& d : c.collapseInputs) inputs.push_back(openInput(d));
  Run run(common, c, "collapse");
  const double nu = CriticalConstants::nu;

  if (c.collapseKind == "gap") {
    std::vector<GapPoint> data;
    for (const auto& in : inputs) {
      if (in.command() != "gap") continue;
      for (const auto& r : readCsv((fs::path(in.dir) / "gap.csv").string(), "gap").rows)
        data.push_back({in.size(), r[1], r[4]});
    }
    CollapseFit fit = fitGapCollapse(data, c.gc.value_or(CriticalConstants::gcInf), c.collapseNuStart,
                                    CriticalConstants::z);
    CsvTable t{"collapse_gap", "L [sites], g [J], x = (g - gc) L^(1/nu), y = gap L^z",
               {"L", "g", "x", "y"}, {}};
    for (const auto& p : data)
      t.addRow({p.ly, p.g, (p.g - fit.gc) * std::pow(p.ly, 1.0 / fit.nu), p.gap * p.ly});
    run.write("collapse.csv", t);
    run.value("gc", fit.gc);
    run.value("nu", fit.nu);
    run.value("residual", fit.residual);
    std::printf("gc = %.6g  nu = %.6g  residual = %.3e\n", fit.gc, fit.nu, fit.residual);
  } else if (c.collapseKind == "correlation") {
    std::vector<CorrelationPoint> data;
    for (const auto& in : inputs) {
      if (in.command() != "quench") continue;
      auto rows = readCsv((fs::path(in.dir) / "correlations.csv").string(), "correlations").rows;
      if (rows.empty()) continue;
      double tLast = rows.back()[0];
      for (const auto& r : rows)
        if (r[0] == tLast && r[1] > 0) data.push_back({static_cast<double>(in.ly()), r[1], r[2]});
    }
    ExponentFit fit = fitCorrelationExponent(data, 0.0, 3.0);
    CsvTable t{"collapse_correlation", "Ly [sites], r [lattice constants], r/Ly, Ly^(2 Delta) cx",
               {"Ly", "r", "x", "y"}, {}};
    for (const auto& p : data) t.addRow({p.ly, p.r, p.r / p.ly, std::pow(p.ly, fit.value) * p.cx});
    run.write("collapse.csv", t);
    run.value("twoDelta", fit.value);
    run.value("residual", fit.residual);
    std::printf("2Delta = %.6g  residual = %.3e\n", fit.value, fit.residual);
  } else {
    // Light-cone speeds per Ly: explicit list first, then light-cone runs.
    std::set<int> lys;
    for (const auto& in : inputs)
      if (in.command() == "quench") lys.insert(in.ly());
    std::map<int, double> speed;
    for (const auto& in : inputs) {
      if (in.command() == "lightcone" && in.manifest.at("summary").contains("c")) {
        speed[in.ly()] = in.manifest.at("summary").at("c").get<double>();
      }
    }
    if (!c.collapseSpeeds.empty()) {
      if (c.collapseSpeeds.size() != lys.size()) {
        throw ConfigError("collapse.speeds needs one entry per distinct Ly (ascending)");
      }
      auto it = c.collapseSpeeds.begin();
      for (int ly : lys) speed[ly] = *it++;
    }
    CsvTable t{"collapse_energy",
               "Ly [sites], v [lattice constants / (1/J)], v/c, eps_bar [J per site], Ly^(2-nu) eps_bar",
               {"Ly", "v", "vOverC", "eps_bar", "scaled"}, {}};
    for (const auto& in : inputs) {
      if (in.command() != "quench") continue;
      if (!speed.count(in.ly())) throw ConfigError("no light-cone speed for Ly = " + std::to_string(in.ly()));
      LatticeGeometry geo(in.lx(), in.ly());
      ObservableSeries s = readSeries(in.dir, geo);
      double tq = in.manifest.at("tqConvention").at("tq").get<double>();
      double eps = s.regionAverage(tq, c.regionFraction * in.lx());
      double v = std::stod(in.key("quench.v"));
      double ratio = v / speed[in.ly()];
      t.addRow({static_cast<double>(in.ly()), v, ratio, eps, std::pow(in.ly(), 2.0 - nu) * eps});
    }
    if (t.rows.empty()) throw ConfigError("collapse found no quench runs");
    std::sort(t.rows.begin(), t.rows.end());
    run.write("collapse.csv", t);
  }
  run.finish();
  return kOk;
}

// ---------------------------------------------------------------------------
// oracle-check

int runOracleCheck(const Common& common, const RunConfig& c) {
  LatticeGeometry geo = c.geometry();
  if (geo.size() > kMaxEdSites) throw ConfigError("oracle-check needs N <= " + std::to_string(kMaxEdSites));
  Run run(common, c, "oracle-check");
  CsvTable t{"oracle", "g [J], energies [J], relative and absolute errors",
             {"g", "E0_dmrg", "E0_ed", "relErr", "gap_dmrg", "gap_ed", "gapErr"}, {}};
  double worstRel = 0.0;
  double worstGap = 0.0;
  for (double g : c.fieldsForStatics()) {
    auto f = staticFields(c, g);
    Spectrum ed = denseSpectrum(geo, f, c.J, 2);
    GapResult r = energyGap(buildHamiltonianMpo(geo, f, c.J), c.dmrg());
    double edGap = ed.values(1) - ed.values(0);
    double rel = std::abs(r.e0 - ed.values(0)) / std::abs(ed.values(0));
    double gapErr = std::abs(r.gap - edGap);
    worstRel = std::max(worstRel, rel);
    worstGap = std::max(worstGap, gapErr);
    t.addRow({g, r.e0, ed.values(0), rel, r.gap, edGap, gapErr});
    std::printf("g = %-8s E0 rel err %.2e  gap err %.2e\n", formatDouble(g).c_str(), rel, gapErr);
  }
  run.write("oracle.csv", t);
  bool pass = worstRel < 1e-8 && worstGap < 1e-6;
  run.value("worstRelativeEnergyError", worstRel);
  run.value("worstGapError", worstGap);
  run.flag("pass", pass);
  run.finish();
  return pass ? kOk : kConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Front-quench simulations of the transverse-field Ising cylinder"};
  app.require_subcommand(1);
  Common common;
  bool oracle = false;
  bool resume = false;

  auto addCommon = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.configPath, "run configuration file");
    sub->add_option("--set", common.overrides, "override a key: --set model.J=1")->take_all();
    sub->add_option("-o,--output", common.outputDir, "run directory (default: output root / name)");
    sub->add_option("--threads", common.threads, "OpenMP threads for the kernels")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", common.quiet, "no progress output");
  };
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"gs", "gap", "quench", "lightcone", "heatwave", "collapse", "oracle-check"}) {
    subs[name] = app.add_subcommand(name);
    addCommon(subs[name]);
  }
  subs["gs"]->description("DMRG ground state for each statics.g");
  subs["gap"]->description("DMRG energy gap for each statics.g");
  subs["quench"]->description("front quench with TDVP");
  subs["quench"]->add_flag("--oracle", oracle, "also run the dense Krylov path and report deviations");
  subs["quench"]->add_flag("--resume", resume, "continue from the run directory's checkpoint");
  subs["lightcone"]->description("entanglement light cone after a local kick");
  subs["heatwave"]->description("free-boson heatwave energy profile");
  subs["collapse"]->description("scaling collapse over run directories");
  subs["oracle-check"]->description("DMRG against exact diagonalization");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    setKernelThreads(common.threads);
    RunConfig config = loadConfig(common);
    if (!config.gc && config.ly < 2) {
      note(common, "warning: model.gc = auto extrapolates the cylinder formula to Ly = 1");
    }
    std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gs") return runGs(common, config);
    if (cmd == "gap") return runGap(common, config);
    if (cmd == "quench") return runQuenchCommand(common, config, oracle, resume);
    if (cmd == "lightcone") return runLightcone(common, config);
    if (cmd == "heatwave") return runHeatwave(common, config);
    if (cmd == "collapse") return runCollapse(common, config);
    if (cmd == "oracle-check") return runOracleCheck(common, config);
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kConvergence;
  } catch (const ResourceError& e) {
    std::cerr << "resource cap: " << e.what() << '\n';
    return kResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
