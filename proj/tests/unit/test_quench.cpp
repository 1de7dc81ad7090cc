#include "doctest.h"

#include "stq/quench.hpp"

#include <cmath>
#include <filesystem>

using namespace stq;

namespace {

QuenchSettings oracleSettings() {
  QuenchSettings s;
  s.prep.chiSchedule = {32, 64, 128};
  s.prep.cutoff = 1e-13;
  s.prep.maxSweeps = 20;
  s.instantaneous = s.prep;
  s.instantaneous.noiseSchedule.clear();
  s.instantaneous.chiSchedule = {128};
  s.instantaneous.minSweeps = 2;
  s.tdvp.truncation = {256, 1e-14};
  s.tdvp.order = 4;
  return s;
}

QuenchProtocol smallProtocol(int lx, int ly) {
  QuenchProtocol p;
  p.geometry = LatticeGeometry(lx, ly, ly > 2);
  p.model.v = 2.0;
  p.model.tau = 0.4;
  p.dt = 0.01;
  p.schedule.localEvery = 20;
  return p;
}

}  // namespace

TEST_CASE("protocol times") {
  QuenchProtocol p;
  p.geometry = LatticeGeometry(16, 2);
  p.model.v = 2.0;
  CHECK(p.tq() == doctest::Approx(7.5 / 2.0));
  CHECK(p.tqHalfLength() == doctest::Approx(4.0));
  CHECK(p.t0() == doctest::Approx(-0.8));
  CHECK(p.endTime() == p.tq());
  auto u = uniformBaselineProtocol(p);
  CHECK(u.tq() == doctest::Approx(0.8));
  auto f = p.prepFields();
  for (double v : f) CHECK(v > p.model.J * p.model.gc + 0.98 * p.model.h);
  p.model.tau = 0.0;
  for (double v : p.prepFields()) CHECK(v == p.model.J * p.model.gc + p.model.h);
  p.tEnd = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("no perturbation leaves the critical ground state") {
  QuenchProtocol p = smallProtocol(6, 2);
  p.model.h = 0.0;
  p.dt = 0.05;
  p.schedule.localEvery = 5;
  auto s = oracleSettings();
  auto series = runQuench(p, s);
  CHECK(series.completed);
  for (const auto& r : series.energy) CHECK(std::abs(r.eps) < 1e-8);
  for (const auto& r : series.local) CHECK(std::abs(r.eps) < 1e-8);
}

TEST_CASE("front quench matches the dense oracle") {
  QuenchProtocol p = smallProtocol(4, 2);
  auto s = oracleSettings();
  auto mps = runQuench(p, s);
  KrylovEvolveSettings ks;
  ks.dtMicro = 0.0005;
  auto dense = runQuenchDense(p, ks);
  auto d = compareSeries(mps, dense);
  MESSAGE("deviations eps " << d.eps << " local " << d.local << " cx " << d.correlation
                            << " svn " << d.entropy);
  CHECK(d.aligned);
  CHECK(d.max() < 1e-6);
  REQUIRE_FALSE(mps.energy.empty());
  CHECK(mps.energy.back().t == doctest::Approx(p.tq()));
  CHECK(mps.energy.back().eps > 1e-4);

  // Sum rule on every local record time, and eps >= 0.
  for (const auto& e : mps.energy) {
    CHECK(e.eps > -1e-10);
    auto locals = mps.localAt(e.t);
    if (locals.empty()) continue;
    double sum = 0;
    for (const auto& l : locals) sum += l.eps;
    CHECK(std::abs(sum - (e.energy - e.e0)) < 1e-8);
  }
  // Mirror symmetry at tq.
  auto at = mps.localAt(p.tq());
  for (const auto& a : at)
    for (const auto& b : at)
      if (a.row == b.row && std::abs(a.x + b.x) < 1e-12) CHECK(std::abs(a.eps - b.eps) < 1e-4);
  for (const auto& r : mps.entropy) CHECK(r.svn >= 0);
}

TEST_CASE("sudden uniform quench matches the dense oracle") {
  QuenchProtocol p = smallProtocol(3, 3);
  p.model.tau = 0.0;
  p.tEnd = 0.3;
  p.schedule.localEvery = 10;
  auto u = uniformBaselineProtocol(p);
  auto s = oracleSettings();
  auto mps = runQuench(u, s);
  auto dense = runQuenchDense(u, KrylovEvolveSettings{0.0005, {}});
  auto d = compareSeries(mps, dense);
  MESSAGE("sudden deviation " << d.max());
  CHECK(d.max() < 1e-6);
  // The sudden quench deposits the full energy at t = 0.
  CHECK(mps.energy.front().eps > 0.1);
  CHECK(mps.energy.back().eps == doctest::Approx(mps.energy.front().eps).epsilon(1e-6));
}

TEST_CASE("resume reproduces the uninterrupted run") {
  namespace fs = std::filesystem;
  QuenchProtocol p = smallProtocol(6, 2);
  p.dt = 0.05;
  p.schedule.localEvery = 4;
  auto s = oracleSettings();
  s.tdvp.truncation = {64, 1e-10};
  auto full = runQuench(p, s);
  REQUIRE(full.completed);

  fs::path dir = fs::temp_directory_path() / "stq_resume_test";
  fs::remove_all(dir);
  auto interrupted = s;
  interrupted.checkpointDir = dir.string();
  interrupted.checkpointEvery = 5;
  interrupted.stopAfterSteps = 13;
  auto part = runQuench(p, interrupted);
  CHECK_FALSE(part.completed);
  auto cp = loadCheckpoint(dir.string());
  CHECK(cp.t > p.t0());
  auto rest = s;
  rest.checkpointDir = dir.string();
  auto resumed = runQuench(p, rest, &cp);
  CHECK(resumed.completed);
  auto d = compareSeries(full, resumed);
  MESSAGE("resume deviation " << d.max());
  CHECK(d.aligned);
  CHECK(d.max() < 1e-8);
  fs::remove_all(dir);
}

TEST_CASE("light-cone experiment") {
  LightConeSetup setup;
  setup.geometry = LatticeGeometry::chain(20);
  setup.g = 1.0;
  setup.tEnd = 3.5;
  DmrgSettings dmrg;
  dmrg.chiSchedule = {16, 32, 64};
  TdvpSettings tdvp;
  tdvp.dt = 0.05;
  tdvp.truncation = {64, 1e-10};
  auto res = lightConeExperiment(setup, dmrg, tdvp);
  REQUIRE(res.velocity.has_value());
  MESSAGE("chain L=20 c = " << res.velocity->c << " +- " << res.velocity->uncertainty);
  CHECK(res.velocity->c == doctest::Approx(2.0).epsilon(0.1));
  // Kicking with an on-site unitary does not change the t = 0 entropies.
  setup.applyKick = false;
  setup.tEnd = 0.5;
  auto quiet = lightConeExperiment(setup, dmrg, tdvp);
  CHECK_FALSE(quiet.velocity.has_value());
  CHECK_FALSE(quiet.frontError.empty());
}
