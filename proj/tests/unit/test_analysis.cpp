#include "doctest.h"

#include "stq/analysis.hpp"
#include "stq/ed.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace stq;

namespace {

// Smooth universal function for synthetic gap data.
double scalingGap(double u) { return std::sqrt(1.0 + u * u) + 0.3 * u; }

std::vector<GapPoint> syntheticGaps(double gc, double nu, double z) {
  std::vector<GapPoint> data;
  for (double ly : {3.0, 4.0, 5.0, 6.0})
    for (double u = -2.0; u <= 2.0; u += 0.25) {
      double g = gc + u * std::pow(ly, -1.0 / nu);
      data.push_back({ly, g, std::pow(ly, -z) * scalingGap(u)});
    }
  return data;
}

}  // namespace

TEST_CASE("pseudo-critical field") {
  CHECK(pseudoCriticalField(5.0) >= 2.8196);
  CHECK(pseudoCriticalField(5.0) <= 2.8216);
  CHECK(pseudoCriticalField(1e9) == doctest::Approx(CriticalConstants::gcInf).epsilon(1e-9));
  CHECK(pseudoCriticalField(3.0) < pseudoCriticalField(4.0));
  CHECK_THROWS_AS(pseudoCriticalField(0.5), InvalidArgument);
}

TEST_CASE("collapse residual") {
  Curve a{3, {0, 1, 2}, {1, 2, 3}};
  Curve b{4, {0.5, 1.5, 2.5}, {1.5, 2.5, 3.5}};
  std::vector<Curve> same{a, b};
  CHECK(collapseResidual(same) < 1e-28);
  // Constant offset 0.1 on the overlap [0.5, 2]: mean square 0.01.
  Curve shifted = b;
  for (double& y : shifted.y) y += 0.1;
  std::vector<Curve> off{a, shifted};
  double ms = 0;
  for (double y : a.y) ms += y * y;
  for (double y : shifted.y) ms += y * y;
  ms /= 6;
  CHECK(collapseResidual(off) == doctest::Approx(0.01 / ms).epsilon(1e-12));
  Curve far{5, {10, 11}, {0, 0}};
  std::vector<Curve> disjoint{a, far};
  CHECK_THROWS_AS(collapseResidual(disjoint), AnalysisError);
  std::vector<Curve> single{a};
  CHECK_THROWS_AS(collapseResidual(single), AnalysisError);
}

TEST_CASE("gap collapse recovers synthetic parameters") {
  const double gc = 3.0, nu = 0.63;
  auto data = syntheticGaps(gc, nu, 1.0);
  CHECK(gapCollapse(data, gc, nu, 1.0) < 1e-5);
  CHECK(gapCollapse(data, gc + 0.1, nu, 1.0) > 10 * gapCollapse(data, gc, nu, 1.0));
  auto fit = fitGapCollapse(data, 2.9, 0.7, 1.0);
  CHECK(std::abs(fit.gc - gc) < 0.005 * gc);
  CHECK(std::abs(fit.nu - nu) < 0.03 * nu);

  // 1% multiplicative noise on each gap.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (auto& p : data) p.gap *= 1 + noise(rng);
  auto noisy = fitGapCollapse(data, 2.9, 0.7, 1.0);
  CHECK(std::abs(noisy.gc - gc) < 0.005 * gc);
  CHECK(std::abs(noisy.nu - nu) < 0.03 * nu);
}

namespace {

std::vector<GapPoint> chainGaps(std::initializer_list<int> lengths) {
  std::vector<GapPoint> data;
  for (int l : lengths)
    for (double u = -2.0; u <= 2.0 + 1e-9; u += 0.25) {
      double g = 1.0 + u / l;
      data.push_back({double(l), g, FreeFermionChain(l, g).gap()});
    }
  return data;
}

}  // namespace

TEST_CASE("gap collapse of the critical transverse-field chain") {
  // gc, nu = 1, 1 beats every 5% displacement once L >= 32.
  auto large = chainGaps({32, 48, 64, 96, 128});
  double exact = gapCollapse(large, 1.0, 1.0, 1.0);
  for (double dg : {-0.05, 0.0, 0.05})
    for (double dn : {-0.05, 0.0, 0.05}) {
      if (dg == 0.0 && dn == 0.0) continue;
      CHECK(gapCollapse(large, 1.0 + dg, 1.0 + dn, 1.0) > exact);
    }
  auto fit = fitGapCollapse(large, 1.05, 0.9, 1.0);
  MESSAGE("chain collapse gc=" << fit.gc << " nu=" << fit.nu << " residual=" << fit.residual);
  CHECK(std::abs(fit.gc - 1.0) < 0.005);
  CHECK(std::abs(fit.nu - 1.0) < 0.03);

  // From L = 8 the 1/L corrections pull the best nu up by ~7%; gc stays sharp.
  auto small = chainGaps({8, 12, 16, 20, 24, 28, 32});
  double ref = gapCollapse(small, 1.0, 1.0, 1.0);
  for (double dg : {-0.05, 0.05})
    for (double dn : {-0.05, 0.0, 0.05}) CHECK(gapCollapse(small, 1.0 + dg, 1.0 + dn, 1.0) > ref);
  CHECK(gapCollapse(small, 1.0, 0.95, 1.0) > ref);
  auto smallFit = fitGapCollapse(small, 1.05, 0.9, 1.0);
  CHECK(std::abs(smallFit.gc - 1.0) < 0.01);
  CHECK(std::abs(smallFit.nu - 1.0) < 0.1);

  std::vector<GapPoint> single(small.begin(), small.begin() + 17);
  CHECK_THROWS_AS(gapCollapse(single, 1.0, 1.0, 1.0), AnalysisError);
  auto negative = small;
  negative[3].gap = -1.0;
  CHECK_THROWS_AS(gapCollapse(negative, 1.0, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("correlation collapse") {
  const double twoDelta = CriticalConstants::twoDelta();
  std::vector<CorrelationPoint> data;
  for (double ly : {4.0, 5.0, 6.0, 8.0})
    for (int r = 1; r <= 4 * int(ly); ++r)
      data.push_back({ly, double(r), std::pow(ly, -twoDelta) * std::exp(-r / ly)});
  double best = correlationCollapse(data, twoDelta);
  CHECK(best < 1e-8);
  CHECK(correlationCollapse(data, twoDelta + 0.05) > 100 * best);
  CHECK(correlationCollapse(data, twoDelta - 0.05) > 100 * best);
  auto fit = fitCorrelationExponent(data, 0.0, 3.0);
  CHECK(std::abs(fit.value - twoDelta) < 1e-3);

  // Global rescaling of every curve leaves the residual unchanged.
  auto scaled = data;
  for (auto& p : scaled) p.cx *= 7.5;
  CHECK(correlationCollapse(scaled, 1.5) ==
        doctest::Approx(correlationCollapse(data, 1.5)).epsilon(1e-12));

  // Size-independent data collapses without rescaling.
  std::vector<CorrelationPoint> flat;
  for (double ly : {3.0, 4.0, 5.0})
    for (int r = 1; r <= 12; ++r) flat.push_back({ly, double(r), std::exp(-0.3 * r / ly)});
  CHECK(std::abs(fitCorrelationExponent(flat, -1.0, 2.0).value) < 1e-3);
}

TEST_CASE("critical chain correlation exponent") {
  // Open critical chain: 2 Delta = 1/4, measured away from both ends.
  std::vector<CorrelationPoint> data;
  for (int l : {24, 32, 48, 64}) {
    FreeFermionChain ff(l, 1.0);
    int ref = l / 4;
    for (int r = 1; r <= l / 2; ++r) data.push_back({double(l), double(r), ff.correlationXX(ref, ref + r)});
  }
  auto fit = fitCorrelationExponent(data, 0.0, 1.0);
  MESSAGE("chain 2Delta=" << fit.value);
  CHECK(std::abs(fit.value - 0.25) < 0.03);
}

TEST_CASE("front velocity") {
  // Front at origin + 2.5 t, sampled at t = 0.4 k on integer bond positions.
  EntropyMap map;
  const double c = 2.5;
  const double origin = 15.0;
  for (int k = 0; k <= 12; ++k) map.times.push_back(0.4 * k);
  for (int b = 0; b < 31; ++b) map.bondX.push_back(b);
  map.entropy = MatR::Zero(map.times.size(), map.bondX.size());
  for (std::size_t k = 0; k < map.times.size(); ++k)
    for (std::size_t b = 0; b < map.bondX.size(); ++b) {
      double d = std::abs(map.bondX[b] - origin);
      if (d <= c * map.times[k]) map.entropy(k, b) = 0.5;
    }
  auto est = velocityFromFront(map, 0.1, origin);
  CHECK(est.c == doctest::Approx(c).epsilon(1e-12));
  CHECK(est.fitError < 1e-12);
  CHECK(est.thresholdSpread < 1e-12);
  CHECK(est.frontTimes.size() == 12);
  // Past t = 6 the front sits at the edge and is excluded.
  EntropyMap longer = map;
  for (int k = 13; k <= 20; ++k) longer.times.push_back(0.4 * k);
  longer.entropy = MatR::Zero(longer.times.size(), longer.bondX.size());
  for (std::size_t k = 0; k < longer.times.size(); ++k)
    for (std::size_t b = 0; b < longer.bondX.size(); ++b)
      if (std::abs(longer.bondX[b] - origin) <= c * longer.times[k]) longer.entropy(k, b) = 0.5;
  auto capped = velocityFromFront(longer, 0.1, origin);
  CHECK(capped.c == doctest::Approx(c).epsilon(1e-12));
  CHECK(capped.frontTimes.size() == 14);
  MatR quiet = MatR::Zero(map.times.size(), map.bondX.size());
  EntropyMap none{map.times, map.bondX, quiet};
  CHECK_THROWS_AS(velocityFromFront(none, 0.1, origin), AnalysisError);
}

TEST_CASE("linear fit errors") {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  auto f = linearFit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.slopeError < 1e-12);
  std::vector<double> y2{1, 3.1, 4.9, 7};
  CHECK(linearFit(x, y2).slopeError > 0);
  std::vector<double> same{1, 1, 1, 1};
  CHECK_THROWS_AS(linearFit(same, y), AnalysisError);
}

TEST_CASE("energy density power law") {
  std::vector<EnergyPoint> data;
  for (int ly = 2; ly <= 8; ++ly) data.push_back({double(ly), -3.249 + 1.1 * std::pow(ly, -1.37)});
  auto fit = energyDensityScalingFit(data, 50);
  CHECK(fit.converged);
  CHECK_FALSE(fit.degenerate);
  CHECK(fit.qPrime == doctest::Approx(-3.249).epsilon(0.01));
  CHECK(fit.bPrime == doctest::Approx(1.1).epsilon(0.01));
  CHECK(fit.exponent == doctest::Approx(1.37).epsilon(0.01));
  CHECK(fit.exponentError < 1e-6);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1e-4);
  for (auto& p : data) p.eps0 += noise(rng);
  auto noisy = energyDensityScalingFit(data, 200, 5);
  CHECK(noisy.exponentError > 0);
  CHECK(std::abs(noisy.exponent - 1.37) < 3 * noisy.exponentError + 0.05);
  auto again = energyDensityScalingFit(data, 200, 5);
  CHECK(again.exponentError == noisy.exponentError);

  auto fixed = energyDensityScalingFitFixed(data, 1.37);
  CHECK(fixed.qPrime == doctest::Approx(-3.249).epsilon(1e-3));

  std::vector<EnergyPoint> flat;
  for (int ly = 2; ly <= 6; ++ly) flat.push_back({double(ly), -3.0});
  CHECK(energyDensityScalingFit(flat).degenerate);
  std::vector<EnergyPoint> few{{2, -1}, {3, -1.1}, {4, -1.2}};
  CHECK_THROWS_AS(energyDensityScalingFit(few), AnalysisError);
}

TEST_CASE("entropy area law") {
  std::vector<EntropyPoint> data;
  for (int ly = 2; ly <= 7; ++ly) data.push_back({double(ly), 0.3 * ly - 0.1 * std::log(ly) + 0.05});
  auto fit = entropyAreaLawFit(data);
  CHECK(std::abs(fit.a - 0.3) < 1e-10);
  CHECK(std::abs(fit.b + 0.1) < 1e-10);
  CHECK(std::abs(fit.c - 0.05) < 1e-10);
  CHECK(fit.rss < 1e-20);
  CHECK_FALSE(fit.collinear);
  CHECK(fit.fStatistic > 1e6);

  // Ly Bell pairs across the cut: S = Ly ln 2.
  std::vector<EntropyPoint> bell;
  for (int ly = 2; ly <= 6; ++ly) bell.push_back({double(ly), ly * std::log(2.0)});
  auto b = entropyAreaLawFit(bell);
  CHECK(b.a == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(std::abs(b.b) < 1e-10);
  CHECK(std::abs(b.c) < 1e-10);

  std::vector<EntropyPoint> two{{2, 1}, {3, 2}, {2, 1.1}};
  CHECK_THROWS_AS(entropyAreaLawFit(two), AnalysisError);
}
