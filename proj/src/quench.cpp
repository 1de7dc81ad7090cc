#include "stq/quench.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace stq {

namespace {

constexpr double kTimeEps = 1e-9;

bool sameTime(double a, double b) { return std::abs(a - b) <= kTimeEps * std::max(1.0, std::abs(a)); }

bool contains(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t - kTimeEps * std::max(1.0, std::abs(t)));
  return it != times.end() && sameTime(*it, t);
}

void addUnique(std::vector<double>& times, double t) {
  if (!contains(times, t)) times.insert(std::upper_bound(times.begin(), times.end(), t), t);
}

struct RecordPlan {
  std::vector<double> scalar;
  std::vector<double> local;
  std::vector<double> correlation;
  std::vector<double> all;
};

RecordPlan planRecords(const QuenchProtocol& p) {
  RecordPlan plan;
  const double t0 = p.t0();
  const double tEnd = p.endTime();
  auto grid = [&](int every, std::vector<double>& out) {
    for (long k = 0;; k += every) {
      double t = t0 + k * p.dt;
      if (t > tEnd + kTimeEps) break;
      addUnique(out, t);
    }
  };
  grid(p.schedule.scalarEvery, plan.scalar);
  grid(p.schedule.localEvery, plan.local);
  for (double t : {p.tq(), tEnd}) {
    addUnique(plan.scalar, t);
    addUnique(plan.local, t);
    addUnique(plan.correlation, t);
  }
  if (!p.schedule.correlationsAtEndOnly)
    for (double t : plan.local) addUnique(plan.correlation, t);
  for (double t : p.schedule.extraTimes) {
    if (t < t0 - kTimeEps || t > tEnd + kTimeEps) continue;
    addUnique(plan.scalar, t);
    addUnique(plan.local, t);
    addUnique(plan.correlation, t);
  }
  for (const auto* list : {&plan.scalar, &plan.local, &plan.correlation})
    for (double t : *list) addUnique(plan.all, t);
  return plan;
}

// Row pairs (a, b) for C_x(r) from the centre column.
std::vector<std::vector<std::pair<int, int>>> correlationPairs(const QuenchProtocol& p) {
  const auto& g = p.geometry;
  const int c0 = (g.lx() - 1) / 2;
  std::vector<std::vector<std::pair<int, int>>> out;
  for (int r = 1; c0 + r < g.lx(); ++r) {
    std::vector<std::pair<int, int>> pairs;
    int rows = p.schedule.averageCorrelationRows ? g.ly() : 1;
    for (int y = 0; y < rows; ++y) pairs.push_back({g.siteIndex(c0, y), g.siteIndex(c0 + r, y)});
    out.push_back(std::move(pairs));
  }
  return out;
}

// Instantaneous ground-state data at one time.
struct GroundData {
  double e0 = 0.0;
  std::vector<double> local;
};

// Observables of one state, shared by the MPS and dense paths.
struct StateObservables {
  double energy = 0.0;
  std::vector<double> local;
  std::vector<double> correlations;
  std::vector<double> entropy;  // per x-bond column
};

void appendRecords(ObservableSeries& out, const QuenchProtocol& p, const RecordPlan& plan,
                   double t, const StateObservables& obs, const GroundData& ground,
                   const std::vector<LocalEnergyOperator>& ops) {
  const auto& g = p.geometry;
  if (contains(plan.scalar, t)) {
    out.energy.push_back({t, obs.energy, ground.e0, (obs.energy - ground.e0) / g.size()});
    for (int x = 0; x + 1 < g.lx(); ++x) out.entropy.push_back({t, x, g.xBondCoord(x), obs.entropy[x]});
  }
  if (contains(plan.local, t)) {
    for (std::size_t k = 0; k < ops.size(); ++k)
      out.local.push_back({t, ops[k].column, ops[k].row, ops[k].x, obs.local[k] - ground.local[k]});
  }
  if (contains(plan.correlation, t)) {
    for (std::size_t r = 0; r < obs.correlations.size(); ++r)
      out.correlations.push_back({t, static_cast<int>(r + 1), obs.correlations[r]});
  }
}

template <class T>
StateObservables measureMps(const Mps<T>& psi, const QuenchProtocol& p, const RecordPlan& plan,
                            double t, const PauliSum& hTerms,
                            const std::vector<LocalEnergyOperator>& ops) {
  StateObservables obs;
  NormEnvironments<T> env(psi);
  obs.energy = env.expectation(hTerms);
  if (contains(plan.local, t))
    for (const auto& op : ops) obs.local.push_back(env.expectation(op.terms));
  if (contains(plan.correlation, t)) {
    const Op2<cd> x = pauliX<cd>();
    for (const auto& pairs : correlationPairs(p)) {
      double sum = 0.0;
      for (auto [a, b] : pairs) {
        std::array<SiteOperator, 2> f{SiteOperator{a, x}, SiteOperator{b, x}};
        sum += realPart(env.productExpectation(f));
      }
      obs.correlations.push_back(sum / pairs.size());
    }
  }
  if (contains(plan.scalar, t)) {
    Mps<T> copy = psi;
    auto all = entanglementEntropies(copy);
    for (int x = 0; x + 1 < p.geometry.lx(); ++x) obs.entropy.push_back(all[p.geometry.xBondCut(x)]);
  }
  return obs;
}

DmrgSettings warmSettings(DmrgSettings s) {
  s.noiseSchedule.clear();
  s.chiSchedule = {s.chiSchedule.back()};
  s.minSweeps = std::min(2, s.maxSweeps);
  return s;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

using nlohmann::json;

json seriesToJson(const ObservableSeries& s) {
  json j;
  j["tq"] = s.tq;
  j["tEnd"] = s.tEnd;
  j["completed"] = s.completed;
  for (const auto& r : s.energy) j["energy"].push_back({r.t, r.energy, r.e0, r.eps});
  for (const auto& r : s.local) j["local"].push_back({r.t, r.column, r.row, r.x, r.eps});
  for (const auto& r : s.correlations) j["correlations"].push_back({r.t, r.r, r.cx});
  for (const auto& r : s.entropy) j["entropy"].push_back({r.t, r.column, r.x, r.svn});
  for (const auto& r : s.truncation) j["truncation"].push_back({r.t, r.discardedWeight, r.maxChi});
  return j;
}

ObservableSeries seriesFromJson(const json& j) {
  ObservableSeries s;
  s.tq = j.at("tq");
  s.tEnd = j.at("tEnd");
  s.completed = j.at("completed");
  auto rows = [&](const char* key) { return j.contains(key) ? j.at(key) : json::array(); };
  for (const auto& r : rows("energy")) s.energy.push_back({r[0], r[1], r[2], r[3]});
  for (const auto& r : rows("local")) s.local.push_back({r[0], r[1], r[2], r[3], r[4]});
  for (const auto& r : rows("correlations")) s.correlations.push_back({r[0], r[1], r[2]});
  for (const auto& r : rows("entropy")) s.entropy.push_back({r[0], r[1], r[2], r[3]});
  for (const auto& r : rows("truncation"))
    s.truncation.push_back({r[0], r[1], r[2].get<Index>()});
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Protocol

double QuenchProtocol::tq() const {
  if (front == FrontKind::Uniform) return 2.0 * model.tau;
  double xmax = 0.0;
  for (int x = 0; x < geometry.lx(); ++x) xmax = std::max(xmax, std::abs(geometry.xCoord(x)));
  return xmax / model.v;
}

double QuenchProtocol::tqHalfLength() const {
  if (front == FrontKind::Uniform) return 2.0 * model.tau;
  return geometry.lx() / (2.0 * model.v);
}

double QuenchProtocol::endTime() const { return std::isnan(tEnd) ? tq() : tEnd; }

std::vector<double> QuenchProtocol::fields(double t) const {
  return front == FrontKind::Uniform ? uniformFieldsAt(geometry, model, t)
                                     : fieldsAt(geometry, model, t);
}

std::vector<double> QuenchProtocol::prepFields() const {
  if (model.tau > 0) return fields(t0());
  return std::vector<double>(geometry.size(), model.J * model.gc + model.h);
}

void QuenchProtocol::validate() const {
  model.validate();
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  if (endTime() < tq() - kTimeEps) throw InvalidArgument("tEnd must not precede tq");
  if (schedule.scalarEvery < 1 || schedule.localEvery < 1) {
    throw InvalidArgument("record cadences must be >= 1");
  }
}

QuenchProtocol uniformBaselineProtocol(const QuenchProtocol& protocol) {
  QuenchProtocol p = protocol;
  p.front = FrontKind::Uniform;
  if (!std::isnan(p.tEnd) && p.tEnd < p.tq()) p.tEnd = std::numeric_limits<double>::quiet_NaN();
  return p;
}

double ObservableSeries::regionAverage(double t, double halfWidth) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : local) {
    if (!sameTime(r.t, t) || std::abs(r.x) > halfWidth + 1e-12) continue;
    sum += r.eps;
    ++count;
  }
  if (count == 0) throw InvalidArgument("no local records in the region at this time");
  return sum / count;
}

std::vector<LocalEnergyRecord> ObservableSeries::localAt(double t) const {
  std::vector<LocalEnergyRecord> out;
  for (const auto& r : local)
    if (sameTime(r.t, t)) out.push_back(r);
  return out;
}

DmrgSettings warmStartSettings(const DmrgSettings& prep) { return warmSettings(prep); }

QuenchSettings::QuenchSettings() : instantaneous(warmSettings(prep)) {}

// ---------------------------------------------------------------------------
// Checkpoints

void saveCheckpoint(const std::string& directory, const QuenchCheckpoint& c) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const fs::path dir(directory);
  saveMps((dir / "state.mps.tmp").string(), c.state);
  json j;
  j["version"] = 1;
  j["t"] = c.t;
  j["gridOrigin"] = c.gridOrigin;
  j["steps"] = c.steps;
  j["series"] = seriesToJson(c.partial);
  {
    std::ofstream out(dir / "cursor.json.tmp");
    out << j.dump();
    if (!out) throw std::runtime_error("cannot write checkpoint cursor");
  }
  fs::rename(dir / "state.mps.tmp", dir / "state.mps");
  fs::rename(dir / "cursor.json.tmp", dir / "cursor.json");
}

QuenchCheckpoint loadCheckpoint(const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  std::ifstream in(dir / "cursor.json");
  if (!in) throw InvalidArgument("no checkpoint in " + directory);
  json j = json::parse(in);
  if (j.at("version") != 1) throw InvalidArgument("unsupported checkpoint version");
  QuenchCheckpoint c;
  c.t = j.at("t");
  c.gridOrigin = j.at("gridOrigin");
  c.steps = j.at("steps");
  c.partial = seriesFromJson(j.at("series"));
  AnyMps state = loadMps((dir / "state.mps").string());
  if (auto* z = std::get_if<Mps<cd>>(&state)) {
    c.state = std::move(*z);
  } else {
    c.state = toComplex(std::get<Mps<double>>(state));
  }
  return c;
}

// ---------------------------------------------------------------------------
// MPS quench

ObservableSeries runQuench(const QuenchProtocol& p, const QuenchSettings& settings,
                           const QuenchCheckpoint* resume) {
  p.validate();
  settings.tdvp.validate();
  const auto& g = p.geometry;
  const RecordPlan plan = planRecords(p);
  TdvpSettings tdvp = settings.tdvp;
  tdvp.dt = p.dt;

  ObservableSeries out;
  Mps<cd> psi;
  double tStart = p.t0();
  long stepsDone = 0;
  std::optional<Mps<double>> warm;
  if (resume) {
    out = resume->partial;
    psi = resume->state;
    tStart = resume->t;
    stepsDone = resume->steps;
  } else {
    Mpo h0 = buildHamiltonianMpo(g, p.prepFields(), p.model.J);
    DmrgResult prep = groundState(h0, settings.prep);
    if (!prep.converged) throw ConvergenceError("ground-state preparation did not converge");
    psi = toComplex(prep.state);
    psi.setTruncationError(0.0);
    warm = std::move(prep.state);
  }
  out.tq = p.tq();
  out.tEnd = p.endTime();
  out.completed = false;

  auto groundAt = [&](double t, const std::vector<double>& f, const PauliSum& hTerms,
                      const std::vector<LocalEnergyOperator>& ops) {
    Mpo mpo = buildHamiltonianMpo(g, f, p.model.J);
    DmrgResult gs = groundState(mpo, settings.instantaneous, warm ? &*warm : nullptr);
    if (!gs.converged) {
      throw ConvergenceError("instantaneous ground state did not converge at t = " +
                             std::to_string(t));
    }
    GroundData data;
    NormEnvironments<double> env(gs.state);
    data.e0 = env.expectation(hTerms);
    if (contains(plan.local, t))
      for (const auto& op : ops) data.local.push_back(env.expectation(op.terms));
    warm = std::move(gs.state);
    return data;
  };

  long steps = stepsDone;
  auto checkpoint = [&](double t, const Mps<cd>& state) {
    if (settings.checkpointDir.empty()) return;
    QuenchCheckpoint c;
    c.t = t;
    c.gridOrigin = p.t0();
    c.steps = steps;
    c.partial = out;
    c.state = state;
    saveCheckpoint(settings.checkpointDir, c);
  };

  auto observer = [&](double t, const Mps<cd>& state, bool scheduled) {
    if (t != tStart) ++steps;
    if (scheduled) {
      auto f = p.fields(t);
      PauliSum hTerms = hamiltonianTerms(g, f, p.model.J);
      auto ops = localEnergyOperators(g, f, p.model.J);
      GroundData ground = groundAt(t, f, hTerms, ops);
      StateObservables obs = measureMps(state, p, plan, t, hTerms, ops);
      appendRecords(out, p, plan, t, obs, ground, ops);
      if (!out.energy.empty() && sameTime(out.energy.back().t, t) && settings.progress) {
        settings.progress(t, out.energy.back());
      }
    }
    long grid = std::lround((t - p.t0()) / p.dt);
    if (t != tStart && settings.checkpointEvery > 0 && grid % settings.checkpointEvery == 0 &&
        sameTime(t, p.t0() + grid * p.dt)) {
      checkpoint(t, state);
    }
  };

  MpoProvider mpoAt = [&](double t) { return buildHamiltonianMpo(g, p.fields(t), p.model.J); };
  EvolveOptions options;
  options.gridOrigin = p.t0();
  options.maxSteps = settings.stopAfterSteps;
  options.observeStart = resume == nullptr;
  // Truncation records ride along with the scalar records.
  TdvpObserver tracking = [&](double t, const Mps<cd>& state, bool scheduled) {
    std::size_t before = out.energy.size();
    observer(t, state, scheduled);
    if (out.energy.size() > before) {
      out.truncation.push_back({t, state.truncationError(), state.maxBondDim()});
    }
  };
  EvolveResult res = evolve(psi, mpoAt, tStart, p.endTime(), plan.all, tdvp, tracking, options);
  out.completed = res.completed;
  if (!res.completed) checkpoint(res.tReached, psi);
  return out;
}

ObservableSeries uniformQuenchBaseline(const QuenchProtocol& protocol,
                                       const QuenchSettings& settings) {
  return runQuench(uniformBaselineProtocol(protocol), settings);
}

// ---------------------------------------------------------------------------
// Dense oracle

ObservableSeries runQuenchDense(const QuenchProtocol& p, const KrylovEvolveSettings& settings) {
  p.validate();
  const auto& g = p.geometry;
  const int n = g.size();
  if (n > kMaxEdSites) throw InvalidArgument("dense quench limited to kMaxEdSites sites");
  const RecordPlan plan = planRecords(p);

  auto prep = denseSpectrum(g, p.prepFields(), p.model.J, 1);
  Vec<cd> psi = prep.vectors[0].cast<cd>();
  ObservableSeries out;
  out.tq = p.tq();
  out.tEnd = p.endTime();
  FieldSchedule fields = [&](double t) { return p.fields(t); };
  double t = p.t0();
  for (double target : plan.all) {
    if (target > t) {
      psi = krylovEvolve(psi, g, fields, p.model.J, t, target, settings);
      t = target;
    }
    auto f = p.fields(t);
    auto hOp = tfiOperator(g, f, p.model.J);
    auto ops = localEnergyOperators(g, f, p.model.J);
    auto gs = denseSpectrum(g, f, p.model.J, 1);
    const VecR& phi = gs.vectors[0];
    GroundData ground;
    ground.e0 = expectationDense(hOp, phi);
    StateObservables obs;
    obs.energy = expectationDense(hOp, psi);
    if (contains(plan.local, t)) {
      for (const auto& op : ops) {
        auto local = pauliSumOperator(op.terms, n);
        ground.local.push_back(expectationDense(local, phi));
        obs.local.push_back(expectationDense(local, psi));
      }
    }
    if (contains(plan.correlation, t)) {
      for (const auto& pairs : correlationPairs(p)) {
        double sum = 0.0;
        for (auto [a, b] : pairs) sum += xxCorrelationDense(psi, a, b, n);
        obs.correlations.push_back(sum / pairs.size());
      }
    }
    if (contains(plan.scalar, t))
      for (int x = 0; x + 1 < g.lx(); ++x)
        obs.entropy.push_back(entanglementEntropyDense(psi, g.xBondCut(x), n));
    appendRecords(out, p, plan, t, obs, ground, ops);
  }
  out.completed = true;
  return out;
}

double SeriesDeviation::max() const {
  if (!aligned) return INFINITY;
  return std::max({eps, energy, local, correlation, entropy});
}

SeriesDeviation compareSeries(const ObservableSeries& a, const ObservableSeries& b) {
  SeriesDeviation d;
  if (a.energy.size() != b.energy.size() || a.local.size() != b.local.size() ||
      a.correlations.size() != b.correlations.size() || a.entropy.size() != b.entropy.size()) {
    d.aligned = false;
    return d;
  }
  for (std::size_t i = 0; i < a.energy.size(); ++i) {
    if (!sameTime(a.energy[i].t, b.energy[i].t)) d.aligned = false;
    d.eps = std::max(d.eps, std::abs(a.energy[i].eps - b.energy[i].eps));
    d.energy = std::max(d.energy, std::abs(a.energy[i].energy - b.energy[i].energy));
  }
  for (std::size_t i = 0; i < a.local.size(); ++i) {
    if (!sameTime(a.local[i].t, b.local[i].t) || a.local[i].column != b.local[i].column ||
        a.local[i].row != b.local[i].row) {
      d.aligned = false;
    }
    d.local = std::max(d.local, std::abs(a.local[i].eps - b.local[i].eps));
  }
  for (std::size_t i = 0; i < a.correlations.size(); ++i) {
    if (!sameTime(a.correlations[i].t, b.correlations[i].t) ||
        a.correlations[i].r != b.correlations[i].r) {
      d.aligned = false;
    }
    d.correlation = std::max(d.correlation, std::abs(a.correlations[i].cx - b.correlations[i].cx));
  }
  for (std::size_t i = 0; i < a.entropy.size(); ++i) {
    if (!sameTime(a.entropy[i].t, b.entropy[i].t) || a.entropy[i].column != b.entropy[i].column) {
      d.aligned = false;
    }
    d.entropy = std::max(d.entropy, std::abs(a.entropy[i].svn - b.entropy[i].svn));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Light cone

LightConeResult lightConeExperiment(const LightConeSetup& s, const DmrgSettings& dmrg,
                                    const TdvpSettings& tdvp) {
  const auto& g = s.geometry;
  if (g.lx() < 3) throw InvalidArgument("light cone needs Lx >= 3");
  const int column = s.kickColumn < 0 ? g.lx() / 2 : s.kickColumn;
  if (column >= g.lx() || s.kickRow < 0 || s.kickRow >= g.ly()) {
    throw InvalidArgument("kick site outside the lattice");
  }
  if (!(s.tEnd > 0)) throw InvalidArgument("tEnd must be positive");
  if (s.recordEvery < 1) throw InvalidArgument("recordEvery must be >= 1");
  std::vector<double> f(g.size(), s.J * s.g);
  Mpo mpo = buildHamiltonianMpo(g, f, s.J);
  DmrgResult gs = groundState(mpo, dmrg);
  if (!gs.converged) throw ConvergenceError("light-cone ground state did not converge");

  LightConeResult out;
  out.groundEnergy = gs.energy;
  out.origin = g.xCoord(column);
  Mps<cd> psi = toComplex(gs.state);
  if (s.applyKick) {
    Op2<cd> op = s.kick == KickOperator::X ? pauliX<cd>() : pauliZ<cd>();
    applyLocalOperator(psi, op, g.siteIndex(column, s.kickRow));
  }
  for (int x = 0; x + 1 < g.lx(); ++x) out.map.bondX.push_back(g.xBondCoord(x));

  std::vector<std::vector<double>> rows;
  auto observer = [&](double t, const Mps<cd>& state, bool) {
    long k = std::lround(t / tdvp.dt);
    if (k % s.recordEvery != 0 && !sameTime(t, s.tEnd)) return;
    Mps<cd> copy = state;
    auto all = entanglementEntropies(copy);
    std::vector<double> row;
    for (int x = 0; x + 1 < g.lx(); ++x) row.push_back(all[g.xBondCut(x)]);
    rows.push_back(std::move(row));
    out.map.times.push_back(t);
  };
  out.evolution = evolve(psi, [&](double) { return mpo; }, 0.0, s.tEnd, {}, tdvp, observer);
  out.map.entropy = MatR(rows.size(), out.map.bondX.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t b = 0; b < rows[i].size(); ++b) out.map.entropy(i, b) = rows[i][b];
  try {
    out.velocity = velocityFromFront(out.map, s.threshold, out.origin);
  } catch (const AnalysisError& e) {
    out.frontError = e.what();
  }
  return out;
}

}  // namespace stq
