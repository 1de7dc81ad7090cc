#include "stq/config.hpp"

#include "stq/analysis.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace stq {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parseDouble(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last || std::isnan(value)) {
    throw ConfigError(key + ": not a number: '" + text + "'");
  }
  return value;
}

long parseInt(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  long value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": not an integer: '" + text + "'");
  }
  return value;
}

bool parseBool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + text + "'");
}

std::vector<double> parseDoubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : splitList(text)) out.push_back(parseDouble(key, item));
  return out;
}

template <class T>
std::string joinList(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += formatDouble(values[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

std::string boolText(bool b) { return b ? "true" : "false"; }

struct Binding {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define STQ_DOUBLE(name, member)                                                      \
  Binding{name, [](RunConfig& c, const std::string& v) { c.member = parseDouble(name, v); }, \
          [](const RunConfig& c) { return formatDouble(c.member); }}
#define STQ_INT(name, member)                                                           \
  Binding{name,                                                                         \
          [](RunConfig& c, const std::string& v) {                                      \
            c.member = static_cast<decltype(c.member)>(parseInt(name, v));              \
          },                                                                            \
          [](const RunConfig& c) { return std::to_string(c.member); }}
#define STQ_BOOL(name, member)                                                      \
  Binding{name, [](RunConfig& c, const std::string& v) { c.member = parseBool(name, v); }, \
          [](const RunConfig& c) { return boolText(c.member); }}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      STQ_DOUBLE("model.J", J),
      {"model.gc",
       [](RunConfig& c, const std::string& v) {
         if (trim(v) == "auto") {
           c.gc.reset();
         } else {
           c.gc = parseDouble("model.gc", v);
         }
       },
       [](const RunConfig& c) { return formatDouble(c.resolvedGc()); }},
      STQ_DOUBLE("model.hFactor", hFactor),
      {"model.h", [](RunConfig& c, const std::string& v) { c.h = parseDouble("model.h", v); },
       [](const RunConfig& c) { return formatDouble(c.resolvedH()); }},
      {"geometry.Lx",
       [](RunConfig& c, const std::string& v) {
         c.lx = static_cast<int>(parseInt("geometry.Lx", v));
       },
       [](const RunConfig& c) { return std::to_string(c.resolvedLx()); }},
      STQ_INT("geometry.Ly", ly),
      STQ_INT("geometry.aspect", aspect),
      STQ_BOOL("geometry.yPeriodic", yPeriodic),
      STQ_DOUBLE("quench.v", v),
      STQ_DOUBLE("quench.tau", tau),
      STQ_DOUBLE("quench.dt", dt),
      STQ_INT("quench.order", order),
      {"quench.tEnd",
       [](RunConfig& c, const std::string& v) {
         if (trim(v) == "tq") {
           c.tEnd.reset();
         } else {
           c.tEnd = parseDouble("quench.tEnd", v);
         }
       },
       [](const RunConfig& c) { return c.tEnd ? formatDouble(*c.tEnd) : std::string("tq"); }},
      STQ_INT("mps.chiMax", chiMax),
      STQ_DOUBLE("mps.cutoff", cutoff),
      {"mps.mode",
       [](RunConfig& c, const std::string& v) {
         std::string t = trim(v);
         if (t == "two-site") {
           c.mode = TdvpMode::TwoSite;
         } else if (t == "one-site") {
           c.mode = TdvpMode::OneSite;
         } else {
           throw ConfigError("mps.mode: expected two-site or one-site");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.mode == TdvpMode::TwoSite ? "two-site" : "one-site");
       }},
      STQ_DOUBLE("mps.truncationBudget", truncationBudget),
      {"dmrg.chiSchedule",
       [](RunConfig& c, const std::string& v) {
         c.chiSchedule.clear();
         for (const auto& item : splitList(v)) c.chiSchedule.push_back(parseInt("dmrg.chiSchedule", item));
       },
       [](const RunConfig& c) { return joinList(c.dmrg().chiSchedule); }},
      STQ_INT("dmrg.maxSweeps", maxSweeps),
      STQ_INT("dmrg.minSweeps", minSweeps),
      STQ_DOUBLE("dmrg.energyTol", energyTol),
      {"dmrg.noise",
       [](RunConfig& c, const std::string& v) { c.noise = parseDoubles("dmrg.noise", v); },
       [](const RunConfig& c) { return joinList(c.noise); }},
      STQ_INT("schedule.scalarEvery", scalarEvery),
      STQ_INT("schedule.localEvery", localEvery),
      STQ_BOOL("schedule.correlationsAtEndOnly", correlationsAtEndOnly),
      STQ_BOOL("schedule.averageRows", averageCorrelationRows),
      {"schedule.extraTimes",
       [](RunConfig& c, const std::string& v) {
         c.extraTimes = parseDoubles("schedule.extraTimes", v);
       },
       [](const RunConfig& c) { return joinList(c.extraTimes); }},
      STQ_INT("schedule.checkpointEvery", checkpointEvery),
      {"statics.g",
       [](RunConfig& c, const std::string& v) { c.staticFields = parseDoubles("statics.g", v); },
       [](const RunConfig& c) { return joinList(c.fieldsForStatics()); }},
      {"lightcone.g",
       [](RunConfig& c, const std::string& v) { c.lightconeG = parseDouble("lightcone.g", v); },
       [](const RunConfig& c) { return formatDouble(c.lightconeG.value_or(c.resolvedGc())); }},
      STQ_INT("lightcone.kickColumn", kickColumn),
      STQ_INT("lightcone.kickRow", kickRow),
      {"lightcone.kick",
       [](RunConfig& c, const std::string& v) {
         std::string t = trim(v);
         if (t == "X") {
           c.kick = KickOperator::X;
         } else if (t == "Z") {
           c.kick = KickOperator::Z;
         } else {
           throw ConfigError("lightcone.kick: expected X or Z");
         }
       },
       [](const RunConfig& c) { return std::string(c.kick == KickOperator::X ? "X" : "Z"); }},
      STQ_DOUBLE("lightcone.tEnd", lightconeTEnd),
      STQ_DOUBLE("lightcone.threshold", lightconeThreshold),
      STQ_DOUBLE("heatwave.c", heatwaveC),
      STQ_DOUBLE("heatwave.m", heatwaveM),
      {"heatwave.L",
       [](RunConfig& c, const std::string& v) { c.heatwaveL = parseDouble("heatwave.L", v); },
       [](const RunConfig& c) { return formatDouble(c.heatwaveL.value_or(c.ly)); }},
      {"heatwave.velocities",
       [](RunConfig& c, const std::string& v) {
         c.heatwaveVelocities = parseDoubles("heatwave.velocities", v);
       },
       [](const RunConfig& c) { return joinList(c.heatwaveVelocities); }},
      STQ_INT("heatwave.points", heatwavePoints),
      {"collapse.kind", [](RunConfig& c, const std::string& v) { c.collapseKind = trim(v); },
       [](const RunConfig& c) { return c.collapseKind; }},
      {"collapse.inputs",
       [](RunConfig& c, const std::string& v) { c.collapseInputs = splitList(v); },
       [](const RunConfig& c) { return joinList(c.collapseInputs); }},
      {"collapse.speeds",
       [](RunConfig& c, const std::string& v) {
         c.collapseSpeeds = parseDoubles("collapse.speeds", v);
       },
       [](const RunConfig& c) { return joinList(c.collapseSpeeds); }},
      STQ_DOUBLE("collapse.regionFraction", regionFraction),
      STQ_DOUBLE("collapse.nuStart", collapseNuStart),
      {"output.root", [](RunConfig& c, const std::string& v) { c.outputRoot = trim(v); },
       [](const RunConfig& c) { return c.outputRoot; }},
      {"output.name", [](RunConfig& c, const std::string& v) { c.outputName = trim(v); },
       [](const RunConfig& c) { return c.outputName; }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         long s = parseInt("seed", v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      STQ_DOUBLE("resources.memoryCapMb", memoryCapMb),
      STQ_BOOL("resources.enforceMemoryCap", enforceMemoryCap),
  };
  return table;
}

#undef STQ_DOUBLE
#undef STQ_INT
#undef STQ_BOOL

}  // namespace

std::string formatDouble(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// KeyValueFile

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile file;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      file.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  const auto& known = RunConfig::knownKeys();
  if (std::find(known.begin(), known.end(), key) == known.end()) {
    throw ConfigError("unknown key '" + key + "'");
  }
  values_[key] = value;
}

void KeyValueFile::setAssignment(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

// ---------------------------------------------------------------------------
// RunConfig

const std::vector<std::string>& RunConfig::knownKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

RunConfig RunConfig::fromKeyValues(const KeyValueFile& file) {
  RunConfig config;
  for (const auto& [key, value] : file.values()) {
    for (const auto& b : bindings()) {
      if (b.key == key) b.set(config, value);
    }
  }
  config.validate();
  return config;
}

double RunConfig::resolvedGc() const {
  if (gc) return *gc;
  return pseudoCriticalField(ly);
}

double RunConfig::resolvedH() const { return h.value_or(hFactor * resolvedGc()); }

LatticeGeometry RunConfig::geometry() const {
  return LatticeGeometry(resolvedLx(), ly, yPeriodic);
}

ModelParams RunConfig::model() const {
  ModelParams m;
  m.J = J;
  m.gc = resolvedGc();
  m.h = resolvedH();
  // The uniform ramp does not use v; keep the model finite.
  m.v = std::isinf(v) ? 1.0 : v;
  m.tau = tau;
  return m;
}

QuenchProtocol RunConfig::protocol() const {
  QuenchProtocol p;
  p.geometry = geometry();
  p.model = model();
  p.front = std::isinf(v) ? FrontKind::Uniform : FrontKind::Spatiotemporal;
  p.dt = dt;
  if (tEnd) p.tEnd = *tEnd;
  p.schedule.scalarEvery = scalarEvery;
  p.schedule.localEvery = localEvery;
  p.schedule.correlationsAtEndOnly = correlationsAtEndOnly;
  p.schedule.averageCorrelationRows = averageCorrelationRows;
  p.schedule.extraTimes = extraTimes;
  return p;
}

DmrgSettings RunConfig::dmrg() const {
  DmrgSettings s;
  if (chiSchedule.empty()) {
    s.chiSchedule.clear();
    for (Index chi = 16; chi < chiMax; chi *= 2) s.chiSchedule.push_back(chi);
    s.chiSchedule.push_back(chiMax);
  } else {
    s.chiSchedule = chiSchedule;
  }
  s.cutoff = cutoff;
  s.maxSweeps = maxSweeps;
  s.minSweeps = minSweeps;
  s.energyTol = energyTol;
  s.noiseSchedule = noise;
  s.seed = seed;
  return s;
}

TdvpSettings RunConfig::tdvp() const {
  TdvpSettings s;
  s.dt = dt;
  s.order = order;
  s.truncation = {chiMax, cutoff};
  s.mode = mode;
  s.truncationBudget = truncationBudget;
  return s;
}

QuenchSettings RunConfig::quenchSettings() const {
  QuenchSettings s;
  s.prep = dmrg();
  s.instantaneous = warmStartSettings(s.prep);
  s.tdvp = tdvp();
  s.checkpointEvery = checkpointEvery;
  return s;
}

LightConeSetup RunConfig::lightCone() const {
  LightConeSetup s;
  s.geometry = geometry();
  s.J = J;
  s.g = lightconeG.value_or(resolvedGc());
  s.kickColumn = kickColumn;
  s.kickRow = kickRow;
  s.kick = kick;
  s.tEnd = lightconeTEnd;
  s.threshold = lightconeThreshold;
  return s;
}

HeatwaveParams RunConfig::heatwave() const {
  HeatwaveParams p;
  p.c = heatwaveC;
  p.v = v;
  p.m = heatwaveM;
  p.tau = tau;
  p.L = heatwaveL.value_or(ly);
  return p;
}

std::vector<double> RunConfig::fieldsForStatics() const {
  if (staticFields.empty()) return {resolvedGc()};
  return staticFields;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (ly < 1) fail("geometry.Ly must be >= 1");
  if (lx && *lx < 1) fail("geometry.Lx must be >= 1");
  if (aspect < 1) fail("geometry.aspect must be >= 1");
  if (resolvedLx() * ly < 2) fail("need at least two sites");
  if (!(J > 0) || std::isinf(J)) fail("model.J must be positive");
  if (!std::isfinite(resolvedGc())) fail("model.gc must be finite");
  if (!(resolvedH() >= 0) || std::isinf(resolvedH())) fail("model.h must be >= 0");
  if (!(v > 0)) fail("quench.v must be positive (inf for the uniform ramp)");
  if (!(tau >= 0) || std::isinf(tau)) fail("quench.tau must be >= 0");
  if (!(dt > 0) || std::isinf(dt)) fail("quench.dt must be positive");
  if (order != 2 && order != 4) fail("quench.order must be 2 or 4");
  if (chiMax < 1) fail("mps.chiMax must be >= 1");
  if (!(cutoff >= 0)) fail("mps.cutoff must be >= 0");
  if (!(truncationBudget > 0)) fail("mps.truncationBudget must be positive");
  for (Index chi : chiSchedule)
    if (chi < 1) fail("dmrg.chiSchedule entries must be >= 1");
  if (maxSweeps < 1 || minSweeps < 1 || minSweeps > maxSweeps) fail("bad dmrg sweep limits");
  if (scalarEvery < 1 || localEvery < 1) fail("schedule cadences must be >= 1");
  if (checkpointEvery < 1) fail("schedule.checkpointEvery must be >= 1");
  if (kickRow < 0 || kickRow >= ly) fail("lightcone.kickRow out of range");
  if (kickColumn >= resolvedLx()) fail("lightcone.kickColumn out of range");
  if (!(lightconeTEnd > 0)) fail("lightcone.tEnd must be positive");
  if (!(lightconeThreshold > 0)) fail("lightcone.threshold must be positive");
  if (!(heatwaveC > 0) || !(heatwaveM > 0)) fail("heatwave.c and heatwave.m must be positive");
  if (heatwavePoints < 3) fail("heatwave.points must be >= 3");
  if (collapseKind != "energy" && collapseKind != "gap" && collapseKind != "correlation") {
    fail("collapse.kind must be energy, gap or correlation");
  }
  if (!(collapseNuStart > 0)) fail("collapse.nuStart must be positive");
  if (!(regionFraction > 0) || regionFraction > 0.5) fail("collapse.regionFraction in (0, 0.5]");
  if (!(memoryCapMb >= 0)) fail("resources.memoryCapMb must be >= 0");
  if (tEnd && std::isfinite(v)) {
    QuenchProtocol p = protocol();
    if (*tEnd < p.tq()) fail("quench.tEnd must not precede tq");
  }
}

std::map<std::string, std::string> RunConfig::resolved() const {
  std::map<std::string, std::string> out;
  for (const auto& b : bindings()) out[b.key] = b.get(*this);
  return out;
}

// ---------------------------------------------------------------------------
// Resources

double estimateMemoryMb(int numSites, int ly, Index chi, int krylovDim) {
  const double block = 16.0 * static_cast<double>(chi) * static_cast<double>(chi);
  const double w = ly + 2.0;
  double mps = numSites * 2.0 * block;
  double environments = 2.0 * numSites * w * block;
  double krylov = (krylovDim + 2.0) * 4.0 * block;
  double svd = 3.0 * 4.0 * block;
  return (mps + environments + krylov + svd) / (1024.0 * 1024.0);
}

MemoryCheck checkMemory(const RunConfig& config) {
  MemoryCheck check;
  check.estimateMb = estimateMemoryMb(config.resolvedLx() * config.ly, config.ly, config.chiMax,
                                      config.tdvp().krylov.maxDim);
  check.capMb = config.memoryCapMb;
  if (check.capMb == 0) {
    long pages = sysconf(_SC_PHYS_PAGES);
    long size = sysconf(_SC_PAGE_SIZE);
    check.capMb = pages > 0 && size > 0 ? static_cast<double>(pages) * size / (1024.0 * 1024.0)
                                        : std::numeric_limits<double>::infinity();
  }
  check.overCap = check.estimateMb > check.capMb;
  if (check.overCap && config.enforceMemoryCap) {
    throw ResourceError("projected memory " + std::to_string(static_cast<long>(check.estimateMb)) +
                        " MB exceeds the cap of " + std::to_string(static_cast<long>(check.capMb)) +
                        " MB (resources.memoryCapMb / resources.enforceMemoryCap)");
  }
  return check;
}

}  // namespace stq
