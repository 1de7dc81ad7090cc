#include "doctest.h"

#include "stq/ed.hpp"
#include "stq/lattice.hpp"
#include "stq/mpo.hpp"
#include "stq/mps.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace stq;

TEST_CASE("snake map is a bijection with symmetric coordinates") {
  for (auto [lx, ly] : {std::pair{2, 1}, {3, 4}, {4, 3}, {5, 5}, {6, 2}}) {
    LatticeGeometry g(lx, ly, ly > 1);
    std::set<int> seen;
    for (int x = 0; x < lx; ++x)
      for (int y = 0; y < ly; ++y) {
        int s = g.siteIndex(x, y);
        CHECK(g.coords(s) == std::pair{x, y});
        seen.insert(s);
      }
    CHECK(static_cast<int>(seen.size()) == lx * ly);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == lx * ly - 1);
    for (int x = 0; x < lx; ++x) CHECK(g.xCoord(x) == doctest::Approx(-g.xCoord(lx - 1 - x)));
    // Consecutive chain sites are lattice neighbours.
    for (int s = 0; s + 1 < g.size(); ++s) {
      auto [x1, y1] = g.coords(s);
      auto [x2, y2] = g.coords(s + 1);
      CHECK(std::abs(x1 - x2) + std::abs(y1 - y2) == 1);
    }
  }
}

TEST_CASE("bond list counts") {
  CHECK(LatticeGeometry(3, 4).bonds().size() == 3 * 4 + 2 * 4);
  CHECK(LatticeGeometry(6, 2).bonds().size() == 6 * 1 + 5 * 2);
  CHECK(LatticeGeometry(4, 3, false).bonds().size() == 4 * 2 + 3 * 3);
  CHECK(LatticeGeometry::chain(5).bonds().size() == 4);
  CHECK_THROWS_AS(LatticeGeometry(4, 1, true), InvalidArgument);
  CHECK_THROWS_AS(LatticeGeometry(1, 3), InvalidArgument);

  // Each unordered pair appears once.
  LatticeGeometry g(4, 3);
  std::set<std::pair<int, int>> pairs;
  for (const auto& b : g.bonds()) pairs.insert({b.first, b.second});
  CHECK(pairs.size() == g.bonds().size());
}

TEST_CASE("front profile values") {
  CHECK(frontProfile(0.0, 0.0, 2.0, 0.4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(frontProfile(0.0, -0.8, 1.0, 0.4) == doctest::Approx(0.5 * (1 + std::tanh(2.0))).epsilon(1e-14));
  CHECK(frontProfile(0.0, -0.8, 1.0, 0.4) == doctest::Approx(0.9820137900).epsilon(1e-10));
  CHECK(frontProfile(3.0, 1e6, 1.0, 1.0) < 1e-300);
  CHECK(frontProfile(3.0, 2.9, 1.0, 0.0) == 1.0);
  CHECK(frontProfile(3.0, 3.1, 1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(frontProfile(NAN, 0.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(frontProfile(0.0, 0.0, 0.0, 1.0), InvalidArgument);

  // Monotone in t at fixed x, and in |x| at fixed t.
  double prev = 2.0;
  for (double t = -2; t < 5; t += 0.1) {
    double f = frontProfile(1.5, t, 1.3, 0.4);
    CHECK(f <= prev);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    prev = f;
  }
  prev = -1.0;
  for (double x = 0; x < 6; x += 0.25) {
    double f = frontProfile(-x, 1.0, 1.3, 0.4);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("transverse field convention") {
  ModelParams p;
  p.v = 2.0;
  p.tau = 0.4;
  CHECK(transverseField(0.0, 1e9, p) == doctest::Approx(p.gc));
  CHECK(transverseField(1.0, 0.5, p) == doctest::Approx(p.gc + 0.5 * p.h));
  CHECK(transverseField(5.0, p.t0(), p) == doctest::Approx(p.gc + p.h).epsilon(1e-6));
  CHECK(p.h == doctest::Approx(5 * p.gc));
  CHECK(p.t0() == doctest::Approx(-0.8));
}

TEST_CASE("two-site MPO dense matrix") {
  auto g = LatticeGeometry::chain(2);
  std::vector<double> fields{1.0, 1.0};
  MatR h = MatR(toSparse(buildHamiltonianMpo(g, fields, 1.0)));
  MatR expected(4, 4);
  // -XX - (Z1 + Z2) in basis uu, ud, du, dd.
  expected << -2, 0, 0, -1,  //
      0, 0, -1, 0,           //
      0, -1, 0, 0,           //
      -1, 0, 0, 2;
  CHECK((h - expected).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<MatR> es(h);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("MPO equals the independently enumerated dense Hamiltonian") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-2.0, 4.0);
  for (auto [lx, ly, periodic] : {std::tuple{3, 3, true}, {3, 4, true}, {4, 3, true}, {6, 2, true},
                                  {4, 2, false}, {5, 1, false}, {2, 2, true}}) {
    LatticeGeometry g(lx, ly, periodic);
    std::vector<double> fields(g.size());
    for (auto& f : fields) f = uni(rng);
    Mpo mpo = buildHamiltonianMpo(g, fields, 1.3);
    MatR fromMpo = MatR(toSparse(mpo));
    MatR dense = toDenseMatrix(tfiOperator(g, fields, 1.3));
    CHECK((fromMpo - dense).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fromMpo - fromMpo.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(mpo.maxBondDim() <= 2 + ly + 1);
  }
}

TEST_CASE("classical Ising limit") {
  auto g = LatticeGeometry::chain(6);
  std::vector<double> fields(6, 0.0);
  auto spec = denseSpectrum(g, fields, 1.0, 1);
  CHECK(spec.values(0) == doctest::Approx(-5.0).epsilon(1e-12));
}

TEST_CASE("local energy operators sum to H") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.5, 6.0);
  for (auto [lx, ly, periodic] : {std::tuple{2, 1, false}, {3, 3, true}, {3, 4, true},
                                  {4, 3, true}, {6, 2, true}, {5, 2, false}, {4, 3, false}}) {
    LatticeGeometry g(lx, ly, periodic);
    std::vector<double> fields(g.size());
    for (auto& f : fields) f = uni(rng);
    auto ops = localEnergyOperators(g, fields, 1.0);
    CHECK(static_cast<int>(ops.size()) == (lx - 1) * ly);
    PauliSum all;
    for (const auto& op : ops) {
      for (const auto& term : op.terms) {
        all.push_back(term);
        for (const auto& f : term.factors) {
          auto [x, y] = g.coords(f.site);
          CHECK((x == op.column || x == op.column + 1));
          int dy = std::abs(y - op.row);
          CHECK((dy <= 1 || (periodic && dy == ly - 1)));
        }
      }
    }
    MatR sum = toDenseMatrix(pauliSumOperator(all, g.size()));
    MatR h = toDenseMatrix(tfiOperator(g, fields, 1.0));
    CHECK((sum - h).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Two-site chain: the single operator is the whole Hamiltonian.
  auto chain = LatticeGeometry::chain(2);
  std::vector<double> f2{0.7, 1.9};
  auto ops = localEnergyOperators(chain, f2, 1.0);
  REQUIRE(ops.size() == 1);
  MatR one = toDenseMatrix(pauliSumOperator(ops[0].terms, 2));
  CHECK((one - toDenseMatrix(tfiOperator(chain, f2, 1.0))).norm() < 1e-14);
}
