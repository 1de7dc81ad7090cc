#include "doctest.h"

#include "stq/dmrg.hpp"
#include "stq/ed.hpp"
#include "stq/mpo.hpp"
#include "stq/mps.hpp"

#include <cmath>

using namespace stq;

namespace {

DmrgSettings smallSettings() {
  DmrgSettings s;
  s.chiSchedule = {16, 32, 64};
  s.maxSweeps = 20;
  s.cutoff = 1e-13;
  return s;
}

}  // namespace

TEST_CASE("two-site chain ground state") {
  auto g = LatticeGeometry::chain(2);
  std::vector<double> fields{1.0, 1.0};
  auto res = groundState(buildHamiltonianMpo(g, fields, 1.0), smallSettings());
  CHECK(res.converged);
  CHECK(res.energy == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("open chain matches free fermions") {
  const int length = 16;
  const double gField = 1.5;
  auto g = LatticeGeometry::chain(length);
  std::vector<double> fields(length, gField);
  auto res = groundState(buildHamiltonianMpo(g, fields, 1.0), smallSettings());
  FreeFermionChain ff(length, gField);
  CHECK(res.converged);
  CHECK(std::abs(res.energy - ff.groundEnergy()) < 1e-8);
  // Variational: never below the exact value beyond roundoff.
  CHECK(res.energy > ff.groundEnergy() - 1e-10);
  int ref = (length - 1) / 2;
  for (int r = 1; ref + r < length; ++r) {
    double c = twoPointCorrelation(res.state, pauliX<cd>(), ref, pauliX<cd>(), ref + r);
    CHECK(std::abs(c - ff.correlationXX(ref, ref + r)) < 1e-6);
  }
  // Sweep energies do not increase once the noise is off.
  for (std::size_t k = 1; k < res.log.size(); ++k)
    if (res.log[k].noise == 0.0 && res.log[k - 1].noise == 0.0)
      CHECK(res.log[k].energy <= res.log[k - 1].energy + 1e-10);
}

TEST_CASE("cylinder ground state matches ED") {
  for (auto [lx, ly] : {std::pair{3, 4}, {4, 3}}) {
    LatticeGeometry g(lx, ly);
    std::vector<double> fields(g.size(), 3.04438);
    auto res = groundState(buildHamiltonianMpo(g, fields, 1.0), smallSettings());
    auto ed = denseSpectrum(g, fields, 1.0, 1);
    CHECK(res.converged);
    CHECK(std::abs(res.energy - ed.values(0)) < 1e-8);
    double fidelity = std::abs(toDense(res.state).dot(ed.vectors[0]));
    CHECK(fidelity > 1.0 - 1e-8);
  }
}

TEST_CASE("gap from penalized excited state") {
  auto two = LatticeGeometry::chain(2);
  std::vector<double> f2{1.0, 1.0};
  auto small = energyGap(buildHamiltonianMpo(two, f2, 1.0), smallSettings());
  MatR h = toDenseMatrix(tfiOperator(two, f2, 1.0));
  Eigen::SelfAdjointEigenSolver<MatR> es(h);
  CHECK(small.gap == doctest::Approx(es.eigenvalues()(1) - es.eigenvalues()(0)).epsilon(1e-9));

  const int length = 12;
  auto g = LatticeGeometry::chain(length);
  std::vector<double> fields(length, 2.0);
  auto res = energyGap(buildHamiltonianMpo(g, fields, 1.0), smallSettings());
  FreeFermionChain ff(length, 2.0);
  CHECK(res.converged);
  CHECK_FALSE(res.degenerate);
  CHECK(std::abs(res.e0 - ff.groundEnergy()) < 1e-9);
  CHECK(std::abs(res.gap - ff.gap()) < 1e-7);
  CHECK(res.overlap < 1e-6);
}

TEST_CASE("spectral bandwidth") {
  auto two = LatticeGeometry::chain(2);
  std::vector<double> f2{1.0, 1.0};
  auto bw2 = spectralBandwidth(buildHamiltonianMpo(two, f2, 1.0), smallSettings());
  CHECK(bw2.width == doctest::Approx(2.0 * std::sqrt(5.0)).epsilon(1e-10));

  auto g = LatticeGeometry::chain(10);
  std::vector<double> fields(10, 1.0);
  auto bw = spectralBandwidth(buildHamiltonianMpo(g, fields, 1.0), smallSettings());
  FreeFermionChain ff(10, 1.0);
  // Spectrum is symmetric: E_max = -E_0.
  CHECK(bw.converged);
  CHECK(std::abs(bw.width - 2.0 * std::abs(ff.groundEnergy())) < 1e-8);
}

TEST_CASE("settings validation") {
  DmrgSettings s;
  s.chiSchedule.clear();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  DmrgSettings t;
  t.minSweeps = 50;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}
