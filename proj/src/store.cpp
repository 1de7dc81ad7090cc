#include "stq/store.hpp"

#include "json.hpp"

#include <boost/crc.hpp>
#include <fcntl.h>
#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef STQ_GIT_DESCRIBE
#define STQ_GIT_DESCRIBE "unknown"
#endif

namespace stq {

namespace fs = std::filesystem;

namespace {

const char* kMagic = "# stq-csv v";

std::string csvNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> splitComma(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

int columnFromX(double x, const LatticeGeometry& g) {
  return static_cast<int>(std::lround(x + 0.5 * (g.lx() - 1) - 0.5));
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

void CsvTable::addRow(std::vector<double> row) {
  if (row.size() != columns.size()) throw InvalidArgument("row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t CsvTable::columnIndex(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("no column '" + name + "' in " + kind);
  return static_cast<std::size_t>(it - columns.begin());
}

void writeCsv(const std::string& path, const CsvTable& table) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kMagic << kCsvSchemaVersion << ' ' << table.kind << '\n';
    out << "# units: " << table.units << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      out << (i ? "," : "") << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csvNumber(row[i]);
      out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
  }
  fs::rename(tmp, path);
}

CsvTable readCsv(const std::string& path, const std::string& expectedKind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind(kMagic, 0) != 0) throw SchemaError(path + ": not an stq csv file");
  std::stringstream head(line.substr(std::strlen(kMagic)));
  int version = 0;
  CsvTable table;
  head >> version >> table.kind;
  if (version != kCsvSchemaVersion) {
    throw SchemaError(path + ": schema v" + std::to_string(version) + " needs migration to v" +
                      std::to_string(kCsvSchemaVersion));
  }
  if (!expectedKind.empty() && table.kind != expectedKind) {
    throw SchemaError(path + ": expected a " + expectedKind + " table, found " + table.kind);
  }
  std::getline(in, line);
  const std::string unitsTag = "# units: ";
  if (line.rfind(unitsTag, 0) != 0) throw SchemaError(path + ": missing units line");
  table.units = line.substr(unitsTag.size());
  std::getline(in, line);
  table.columns = splitComma(line);
  int number = 3;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto cells = splitComma(line);
    if (cells.size() != table.columns.size()) {
      throw SchemaError(path + ":" + std::to_string(number) + ": wrong number of fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') {
        throw SchemaError(path + ":" + std::to_string(number) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable energyTable(const ObservableSeries& s) {
  CsvTable t{"energy", "t [1/J], E [J], E0 [J], eps [J per site]", {"t", "E", "E0", "eps"}, {}};
  for (const auto& r : s.energy) t.addRow({r.t, r.energy, r.e0, r.eps});
  return t;
}

CsvTable localEnergyTable(const ObservableSeries& s) {
  CsvTable t{"local_energy", "t [1/J], x [lattice constants, x-bond midpoint], y [row], eps_xy [J]",
             {"t", "x", "y", "eps_xy"}, {}};
  for (const auto& r : s.local) t.addRow({r.t, r.x, static_cast<double>(r.row), r.eps});
  return t;
}

CsvTable correlationTable(const ObservableSeries& s) {
  CsvTable t{"correlations", "t [1/J], r [lattice constants], cx [dimensionless]",
             {"t", "r", "cx"}, {}};
  for (const auto& r : s.correlations) t.addRow({r.t, static_cast<double>(r.r), r.cx});
  return t;
}

CsvTable entropyTable(const ObservableSeries& s) {
  CsvTable t{"entropy", "t [1/J], xbond [lattice constants], svn [nats]", {"t", "xbond", "svn"}, {}};
  for (const auto& r : s.entropy) t.addRow({r.t, r.x, r.svn});
  return t;
}

CsvTable truncationTable(const ObservableSeries& s) {
  CsvTable t{"truncation", "t [1/J], discarded [relative weight, accumulated], chi [bond dimension]",
             {"t", "discarded", "chi"}, {}};
  for (const auto& r : s.truncation) t.addRow({r.t, r.discardedWeight, static_cast<double>(r.maxChi)});
  return t;
}

std::vector<std::string> writeSeries(const std::string& directory, const ObservableSeries& series) {
  fs::create_directories(directory);
  const fs::path dir(directory);
  std::vector<std::pair<std::string, CsvTable>> tables = {
      {"energy.csv", energyTable(series)},
      {"local_energy.csv", localEnergyTable(series)},
      {"correlations.csv", correlationTable(series)},
      {"entropy.csv", entropyTable(series)},
      {"truncation.csv", truncationTable(series)},
  };
  std::vector<std::string> names;
  for (const auto& [name, table] : tables) {
    writeCsv((dir / name).string(), table);
    names.push_back(name);
  }
  return names;
}

ObservableSeries readSeries(const std::string& directory, const LatticeGeometry& geometry) {
  const fs::path dir(directory);
  ObservableSeries s;
  for (const auto& r : readCsv((dir / "energy.csv").string(), "energy").rows) {
    s.energy.push_back({r[0], r[1], r[2], r[3]});
  }
  for (const auto& r : readCsv((dir / "local_energy.csv").string(), "local_energy").rows) {
    s.local.push_back({r[0], columnFromX(r[1], geometry), static_cast<int>(r[2]), r[1], r[3]});
  }
  for (const auto& r : readCsv((dir / "correlations.csv").string(), "correlations").rows) {
    s.correlations.push_back({r[0], static_cast<int>(r[1]), r[2]});
  }
  for (const auto& r : readCsv((dir / "entropy.csv").string(), "entropy").rows) {
    s.entropy.push_back({r[0], columnFromX(r[1], geometry), r[1], r[2]});
  }
  if (fs::exists(dir / "truncation.csv")) {
    for (const auto& r : readCsv((dir / "truncation.csv").string(), "truncation").rows) {
      s.truncation.push_back({r[0], r[1], static_cast<Index>(r[2])});
    }
  }
  if (!s.energy.empty()) s.tEnd = s.energy.back().t;
  return s;
}

std::uint32_t fileCrc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  boost::crc_32_type crc;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    crc.process_bytes(buf, static_cast<std::size_t>(in.gcount()));
  }
  return crc.checksum();
}

// ---------------------------------------------------------------------------
// Run directories

RunLock::RunLock(const std::string& directory) {
  fs::create_directories(directory);
  path_ = (fs::path(directory) / ".lock").string();
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    int err = errno;
    std::string p = path_;
    path_.clear();
    if (err == EEXIST) throw std::runtime_error("run directory is locked by another writer: " + p);
    throw std::runtime_error("cannot create " + p + ": " + std::strerror(err));
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  if (!path_.empty()) ::unlink(path_.c_str());
}

std::string outputRoot(const RunConfig& config) {
  if (const char* env = std::getenv("STQ_OUTPUT_ROOT"); env && *env) return env;
  if (!config.outputRoot.empty()) return config.outputRoot;
  return "runs";
}

std::string runDirectory(const RunConfig& config, const std::string& command) {
  std::string name = config.outputName;
  if (name.empty()) {
    name = command + "-Lx" + std::to_string(config.resolvedLx()) + "-Ly" + std::to_string(config.ly);
    if (command == "quench") name += "-v" + formatDouble(config.v);
  }
  return (fs::path(outputRoot(config)) / name).string();
}

// ---------------------------------------------------------------------------
// Manifest

std::string codeVersion() { return STQ_GIT_DESCRIBE; }

void RunManifest::addFile(const std::string& directory, const std::string& name) {
  fs::path p = fs::path(directory) / name;
  for (const auto& f : files)
    if (f.name == name) throw InvalidArgument("file listed twice in the manifest: " + name);
  files.push_back({name, fs::file_size(p), fileCrc32(p.string())});
}

std::string RunManifest::toJson() const {
  using nlohmann::json;
  json j;
  j["schema"] = "stq-manifest";
  j["schemaVersion"] = kCsvSchemaVersion;
  j["command"] = command;
  j["codeVersion"] = codeVersion();

  json cfg = json::object();
  for (const auto& [k, v] : config.resolved()) cfg[k] = v;
  j["config"] = cfg;

  QuenchProtocol p = config.protocol();
  ModelParams m = config.model();
  j["derived"] = {
      {"Lx", config.resolvedLx()},
      {"Ly", config.ly},
      {"N", config.resolvedLx() * config.ly},
      {"gc", m.gc},
      {"h", m.h},
      {"hOverGc", m.gc != 0 ? m.h / m.gc : 0.0},
      {"LxOverLy", static_cast<double>(config.resolvedLx()) / config.ly},
      {"t0", p.t0()},
      {"t0OverTau", config.tau > 0 ? p.t0() / config.tau : 0.0},
      {"front", p.front == FrontKind::Uniform ? "uniform" : "spatiotemporal"},
  };
  j["tqConvention"] = {
      {"used", p.front == FrontKind::Uniform ? "2 tau (uniform ramp)" : "max_i |x_i| / v"},
      {"tq", p.tq()},
      {"alternativeLxOver2v", std::isinf(config.v) ? 0.0 : p.tqHalfLength()},
      {"endTime", p.endTime()},
  };

  utsname u{};
  char host[256] = {0};
  gethostname(host, sizeof host - 1);
  uname(&u);
  j["host"] = {{"hostname", host},
               {"system", std::string(u.sysname) + " " + u.release},
               {"machine", u.machine},
               {"threads", threads}};
  j["wallSeconds"] = wallSeconds;

  json flagsJson = json::object();
  for (const auto& [k, v] : flags) flagsJson[k] = v;
  j["flags"] = flagsJson;
  json summaryJson = json::object();
  for (const auto& [k, v] : summary) summaryJson[k] = std::isfinite(v) ? json(v) : json(formatDouble(v));
  j["summary"] = summaryJson;

  json list = json::array();
  for (const auto& f : files) {
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", f.crc32);
    list.push_back({{"name", f.name}, {"bytes", f.bytes}, {"crc32", crc}});
  }
  j["files"] = list;
  return j.dump(2) + "\n";
}

void writeManifest(const std::string& directory, const RunManifest& manifest) {
  fs::path dir(directory);
  fs::create_directories(dir);
  fs::path tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << manifest.toJson();
    if (!out) throw std::runtime_error("cannot write manifest in " + directory);
  }
  fs::rename(tmp, dir / "manifest.json");
}

}  // namespace stq
