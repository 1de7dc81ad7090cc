#include "doctest.h"

#include "stq/store.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace stq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("stq_store_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig configFrom(const std::string& text) {
  return RunConfig::fromKeyValues(KeyValueFile::parse(text));
}

}  // namespace

TEST_CASE("config defaults") {
  RunConfig c = configFrom("geometry.Ly = 5\n");
  CHECK(c.resolvedLx() == 40);
  CHECK(c.resolvedGc() > 2.8196);
  CHECK(c.resolvedGc() < 2.8216);
  CHECK(c.resolvedH() == doctest::Approx(5.0 * c.resolvedGc()));
  CHECK(c.protocol().t0() == doctest::Approx(-2.0 * c.tau));
  CHECK(c.chiMax == 512);
  CHECK(c.cutoff == 1e-10);
  CHECK(c.order == 4);
  auto d = c.dmrg().chiSchedule;
  CHECK(d.front() == 16);
  CHECK(d.back() == 512);
}

TEST_CASE("config parsing") {
  RunConfig c = configFrom(R"(# comment
model.gc = 3.0
model.hFactor = 2
geometry.Ly = 3
geometry.Lx = 4
geometry.yPeriodic = false
quench.v = inf
statics.g = 1, 3, 6
dmrg.chiSchedule = 8,16
)");
  CHECK(c.resolvedGc() == 3.0);
  CHECK(c.resolvedH() == 6.0);
  CHECK_FALSE(c.geometry().yPeriodic());
  CHECK(c.protocol().front == FrontKind::Uniform);
  CHECK(c.fieldsForStatics() == std::vector<double>{1.0, 3.0, 6.0});
  CHECK(c.dmrg().chiSchedule == std::vector<Index>{8, 16});

  CHECK_THROWS_AS(configFrom("model.Jx = 1\n"), ConfigError);
  CHECK_THROWS_AS(configFrom("geometry.Ly = two\n"), ConfigError);
  CHECK_THROWS_AS(configFrom("geometry.Ly = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(configFrom("quench.order = 3\n"), ConfigError);
  CHECK_THROWS_AS(configFrom("model.J\n"), ConfigError);
  CHECK_THROWS_AS(configFrom("quench.v = -1\n"), ConfigError);

  KeyValueFile f = KeyValueFile::parse("geometry.Ly = 2\n");
  f.setAssignment("geometry.Ly=4");
  CHECK(RunConfig::fromKeyValues(f).ly == 4);
  CHECK_THROWS_AS(f.setAssignment("bogus=1"), ConfigError);
}

TEST_CASE("resolved config round-trips") {
  RunConfig c = configFrom("geometry.Ly = 3\nquench.v = 1.7\nmodel.gc = 2.9\nseed = 42\n");
  KeyValueFile f;
  for (const auto& [k, v] : c.resolved())
    if (!v.empty()) f.set(k, v);
  RunConfig back = RunConfig::fromKeyValues(f);
  CHECK(back.resolved() == c.resolved());
  CHECK(c.resolved().size() == RunConfig::knownKeys().size());
}

TEST_CASE("production-scale config is accepted") {
  RunConfig c = configFrom("geometry.Ly = 5\nmps.chiMax = 512\nresources.enforceMemoryCap = false\n");
  CHECK(c.resolvedLx() * c.ly == 200);
  auto check = checkMemory(c);
  CHECK(check.estimateMb > 1000.0);
  RunConfig capped = configFrom("geometry.Ly = 5\nresources.memoryCapMb = 100\n");
  CHECK_THROWS_AS(checkMemory(capped), ResourceError);
  CHECK(estimateMemoryMb(200, 5, 256, 30) < estimateMemoryMb(200, 5, 512, 30));
}

TEST_CASE("csv round trip is exact") {
  fs::path dir = scratch("csv");
  CsvTable t{"energy", "t [1/J]", {"t", "E", "E0", "eps"}, {}};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 1000; ++i) {
    t.addRow({i * 0.05, gauss(rng) * 1e3, -std::exp(gauss(rng)), gauss(rng) * 1e-12});
  }
  writeCsv((dir / "a.csv").string(), t);
  CsvTable back = readCsv((dir / "a.csv").string(), "energy");
  CHECK(back.columns == t.columns);
  CHECK(back.units == t.units);
  REQUIRE(back.rows.size() == t.rows.size());
  bool exact = true;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) exact = exact && back.rows[i][j] == t.rows[i][j];
  CHECK(exact);
  writeCsv((dir / "b.csv").string(), back);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(fileCrc32((dir / "a.csv").string()) == fileCrc32((dir / "b.csv").string()));

  CHECK_THROWS_AS(readCsv((dir / "a.csv").string(), "entropy"), SchemaError);
  std::string text = slurp(dir / "a.csv");
  text.replace(text.find("v1"), 2, "v0");
  std::ofstream((dir / "old.csv")) << text;
  CHECK_THROWS_AS(readCsv((dir / "old.csv").string()), SchemaError);
  CHECK_THROWS_AS(t.addRow({1.0}), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("series round trip") {
  fs::path dir = scratch("series");
  LatticeGeometry g(6, 2);
  ObservableSeries s;
  for (int k = 0; k < 5; ++k) {
    double t = -0.8 + 0.1 * k;
    s.energy.push_back({t, -20.0 + 0.1 * k, -20.5, 0.5 / 12 + k * 1e-3});
    for (int col = 0; col + 1 < g.lx(); ++col) {
      for (int row = 0; row < 2; ++row)
        s.local.push_back({t, col, row, g.xBondCoord(col), 0.01 * col + 0.001 * row + t});
      s.entropy.push_back({t, col, g.xBondCoord(col), 0.1 * col + t * t});
    }
    s.truncation.push_back({t, 1e-12 * k, 8 + k});
  }
  for (int r = 1; r <= 3; ++r) s.correlations.push_back({-0.4, r, std::exp(-r / 3.0)});
  auto names = writeSeries(dir.string(), s);
  CHECK(names.size() == 5);
  ObservableSeries back = readSeries(dir.string(), g);
  auto d = compareSeries(s, back);
  CHECK(d.aligned);
  CHECK(d.max() == 0.0);
  REQUIRE(back.local.size() == s.local.size());
  for (std::size_t i = 0; i < s.local.size(); ++i) CHECK(back.local[i].column == s.local[i].column);
  CHECK(back.truncation.back().maxChi == 12);
  fs::remove_all(dir);
}

TEST_CASE("run locks isolate writers") {
  fs::path root = scratch("locks");
  {
    RunLock a((root / "one").string());
    CHECK_THROWS(RunLock((root / "one").string()));
    RunLock b((root / "two").string());
    CHECK(fs::exists(a.path()));
  }
  CHECK_FALSE(fs::exists(root / "one" / ".lock"));
  RunLock again((root / "one").string());
  fs::remove_all(root);
}

TEST_CASE("output root and manifest") {
  RunConfig c = configFrom("geometry.Ly = 5\nquench.v = 3\n");
  ::setenv("STQ_OUTPUT_ROOT", "/tmp/stq_root_env", 1);
  CHECK(outputRoot(c) == "/tmp/stq_root_env");
  CHECK(runDirectory(c, "quench").rfind("/tmp/stq_root_env/quench-Lx40-Ly5", 0) == 0);
  ::unsetenv("STQ_OUTPUT_ROOT");
  CHECK(outputRoot(c) == "runs");

  fs::path dir = scratch("manifest");
  CsvTable t{"energy", "t [1/J]", {"t", "E", "E0", "eps"}, {{0.0, 1.0, 0.5, 0.25}}};
  writeCsv((dir / "energy.csv").string(), t);
  RunManifest m;
  m.command = "quench";
  m.config = c;
  m.flags.push_back({"completed", true});
  m.summary.push_back({"velocity", 3.0});
  m.addFile(dir.string(), "energy.csv");
  CHECK_THROWS_AS(m.addFile(dir.string(), "energy.csv"), InvalidArgument);
  writeManifest(dir.string(), m);
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["derived"]["hOverGc"].get<double>() == doctest::Approx(5.0));
  CHECK(j["derived"]["LxOverLy"].get<double>() == doctest::Approx(8.0));
  CHECK(j["derived"]["t0OverTau"].get<double>() == doctest::Approx(-2.0));
  CHECK(j["tqConvention"]["tq"].get<double>() == doctest::Approx(19.5 / 3.0));
  CHECK(j["tqConvention"]["alternativeLxOver2v"].get<double>() == doctest::Approx(40.0 / 6.0));
  CHECK(j["files"].size() == 1);
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", fileCrc32((dir / "energy.csv").string()));
  CHECK(j["files"][0]["crc32"].get<std::string>() == crc);
  CHECK(j["config"]["model.gc"].get<std::string>() == formatDouble(c.resolvedGc()));
  fs::remove_all(dir);
}
