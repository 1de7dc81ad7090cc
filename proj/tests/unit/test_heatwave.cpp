#include "doctest.h"

#include "stq/heatwave.hpp"
#include "stq/types.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace stq;

namespace {

constexpr double kPi = std::numbers::pi;

HeatwaveParams params(double beta, double tau = 0.0) {
  HeatwaveParams p;
  p.c = 1.3;
  p.v = p.c / beta;
  p.m = 2.0;
  p.tau = tau;
  p.L = 3.0;
  return p;
}

double legendreP2(double x) { return 0.5 * (3 * x * x - 1); }

}  // namespace

TEST_CASE("Doppler factor identities") {
  for (double beta : {0.0, 0.2, 0.6, 0.9}) {
    double gamma = 1.0 / std::sqrt(1 - beta * beta);
    CHECK(std::abs(dopplerFactor(0, beta) * dopplerFactor(kPi, beta) - 1.0) < 1e-12);
    CHECK(std::abs(dopplerFactor(kPi / 2, beta) - gamma) < 1e-12);
    CHECK(std::abs(dopplerFactor(kPi, beta) - std::sqrt((1 + beta) / (1 - beta))) < 1e-12);
    double prev = 0.0;
    for (double th = 0; th <= kPi; th += 0.05) {
      double eta = dopplerFactor(th, beta);
      CHECK(eta >= prev);
      prev = eta;
    }
  }
  CHECK(dopplerFactor(1.1, 0.0) == 1.0);
  CHECK(dopplerFactor(kPi, 0.6) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(dopplerFactor(kPi / 2, 0.6) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK_THROWS_AS(dopplerFactor(0.3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(dopplerFactor(-0.1, 0.5), InvalidArgument);
}

TEST_CASE("mode population branches") {
  HeatwaveParams p = params(0.6);
  double theta = 1.0;
  double eta = dopplerFactor(theta, p.beta());
  auto kAt = [&](double etaOmega) { return etaOmega / (eta * p.c); };
  CHECK(modePopulation(kAt(p.m / 2), theta, p) == doctest::Approx(0.5).epsilon(1e-14));
  double k10 = kAt(10 * p.m);
  CHECK(modePopulation(k10, theta, p) < 1e-3 * p.m / (4 * 10 * p.m));
  // Continuous at the crossover and non-increasing.
  double k1 = kAt(p.m);
  CHECK(std::abs(modePopulation(k1 * (1 - 1e-12), theta, p) -
                 modePopulation(k1 * (1 + 1e-12), theta, p)) < 1e-10);
  double prev = 1e300;
  for (double k = 0.01; k < 5; k += 0.01) {
    double n = modePopulation(k, theta, p);
    CHECK(n <= prev);
    prev = n;
  }
  HeatwaveParams nearLight = params(1.0 - 1e-12);
  CHECK(modePopulation(0.5, kPi, nearLight) < 1e-100);
  CHECK_THROWS_AS(modePopulation(0.0, 0.0, p), InvalidArgument);
}

TEST_CASE("angular energy density closed forms") {
  for (double beta : {0.2, 0.6, 0.9}) {
    HeatwaveParams p = params(beta);
    double eta = dopplerFactor(kPi, beta);
    for (double th : {0.0, 0.7, kPi / 2, 2.5, kPi}) {
      double e = angularEnergyDensity(th, p);
      double h = dopplerFactor(th, beta);
      double closed = std::pow(p.m, 3) / (8 * p.c * p.c * std::pow(h, 3) * p.L * p.L);
      CHECK(std::abs(e - closed) < 1e-10 * closed);
      CHECK(std::abs(angularEnergyDensityQuadrature(th, p) - closed) < 1e-10 * closed);
    }
    double ratio = angularEnergyDensity(kPi, p) / angularEnergyDensity(0, p);
    CHECK(std::abs(ratio - std::pow(eta, -6)) < 1e-10 * std::pow(eta, -6));
    CHECK(etaFactorPrediction(p) == doctest::Approx(ratio));
    // Full angular average: Legendre P2(gamma) times the isotropic value.
    double iso = std::pow(p.m, 3) / (8 * p.c * p.c * p.L * p.L);
    CHECK(meanAngularEnergy(p) == doctest::Approx(legendreP2(p.gamma()) * iso).epsilon(1e-12));
  }
  // UV-controlled regime: eps ~ 1/eta, and the angular average is isotropic.
  HeatwaveParams uv = params(0.5, 2.0);
  uv.m = 40.0;
  double eta = dopplerFactor(kPi, 0.5);
  CHECK(angularEnergyDensity(kPi, uv) / angularEnergyDensity(0, uv) ==
        doctest::Approx(1 / (eta * eta)).epsilon(1e-12));
  CHECK(meanAngularEnergy(uv) ==
        doctest::Approx(uv.m / (8 * uv.c * uv.c * uv.tau * uv.tau * uv.L * uv.L)).epsilon(1e-12));
  // v -> infinity: isotropic.
  HeatwaveParams fast = params(1e-9);
  CHECK(angularEnergyDensity(0, fast) == doctest::Approx(angularEnergyDensity(kPi, fast)).epsilon(1e-8));
}

TEST_CASE("spatial profile shape") {
  HeatwaveParams p = params(0.5);
  double tq = 4.0;
  std::vector<double> xs;
  for (double x = -p.v * tq; x <= p.v * tq; x += 0.173) xs.push_back(x);
  auto prof = spatialEnergyProfile(xs, tq, p);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(prof[i] == doctest::Approx(heatwaveDensity(-xs[i], tq, p)).epsilon(1e-12));

  double hot = heatwaveDensity(hotPlateauCenter(tq, p), tq, p);
  // Flat plateau between the light cone and the front.
  for (double x = p.c * tq + 0.01; x < p.v * tq; x += 0.3)
    CHECK(heatwaveDensity(x, tq, p) == doctest::Approx(hot).epsilon(1e-12));
  // Cold centre, monotone up to the light cone, nothing beyond the front.
  double prev = 0.0;
  for (double x = 0; x <= p.c * tq; x += 0.05) {
    double e = heatwaveDensity(x, tq, p);
    CHECK(e >= prev - 1e-14);
    prev = e;
  }
  CHECK(heatwaveDensity(0, tq, p) < hot);
  CHECK(heatwaveDensity(p.v * tq + 0.01, tq, p) == 0.0);

  auto norm = normalizedEnergyProfile(std::vector<double>{0.0, hotPlateauCenter(tq, p)}, tq, p, 7.0);
  CHECK(norm[1] == doctest::Approx(7.0));
  CHECK(norm[0] / norm[1] == doctest::Approx(heatwaveDensity(0, tq, p) / hot));

  // Very fast front: flat profile at the isotropic value.
  HeatwaveParams fast = params(1e-6);
  double mean = meanAngularEnergy(fast);
  for (double x : {-3.0, -0.4, 0.9, 5.0})
    CHECK(heatwaveDensity(x, 10.0, fast) == doctest::Approx(mean).epsilon(1e-5));

  HeatwaveParams slow = params(0.5);
  slow.v = slow.c;
  CHECK_THROWS_AS(heatwaveDensity(0.0, 1.0, slow), InvalidArgument);
}

TEST_CASE("profile conserves the emitted energy") {
  for (double beta : {0.3, 0.5, 0.8}) {
    HeatwaveParams p = params(beta, beta > 0.6 ? 0.3 : 0.0);
    double tq = 2.5;
    auto f = [&](double x) { return heatwaveDensity(x, tq, p); };
    boost::math::quadrature::tanh_sinh<double> ts;
    double total = 2.0 * (ts.integrate(f, 0.0, p.c * tq) + ts.integrate(f, p.c * tq, p.v * tq));
    // Each emission event carries (1/pi) int eps d theta per unit swept length.
    double events = 0.0;
    const int nEvents = 400;
    for (int e = 0; e < nEvents; ++e) events += 2.0 * p.v * (tq / nEvents) * meanAngularEnergy(p);
    CHECK(std::abs(total - events) < 1e-6 * events);
  }
}

TEST_CASE("continuum profile equals binned emission events") {
  HeatwaveParams p = params(0.5);
  const double tq = 3.0;
  const double xmax = p.v * tq;
  const int bins = 24;
  const double width = 2 * xmax / bins;
  std::vector<double> hist(bins, 0.0);
  const int nEvents = 1500;
  const int nAngles = 1500;
  for (int e = 0; e < nEvents; ++e) {
    double te = (e + 0.5) * tq / nEvents;
    double weight = p.v * tq / nEvents;
    for (int s : {1, -1}) {
      double xf = s * p.v * te;
      double r = p.c * (tq - te);
      for (int a = 0; a < nAngles; ++a) {
        double phi = (a + 0.5) * 2 * kPi / nAngles;
        double theta = std::acos(std::clamp(s * std::cos(phi), -1.0, 1.0));
        double x = xf + r * std::cos(phi);
        int b = static_cast<int>(std::floor((x + xmax) / width));
        if (b < 0 || b >= bins) continue;
        hist[b] += weight * angularEnergyDensity(theta, p) / nAngles;
      }
    }
  }
  boost::math::quadrature::tanh_sinh<double> ts;
  for (int b = 0; b < bins; ++b) {
    double lo = -xmax + b * width;
    double hi = lo + width;
    double avg = ts.integrate([&](double x) { return heatwaveDensity(x, tq, p); }, lo, hi) / width;
    CHECK(std::abs(hist[b] / width - avg) < 2e-3 * heatwaveDensity(hotPlateauCenter(tq, p), tq, p));
  }
}

TEST_CASE("energy versus velocity") {
  HeatwaveParams base = params(0.5);
  const double lx = 40;
  const double w = 4;
  std::vector<double> vs{1.05 * base.c, 1.2 * base.c, 1.5 * base.c, 2 * base.c, 4 * base.c,
                         INFINITY};
  auto curve = energyVsVelocity(vs, base, lx, w);
  double iso = std::pow(base.m, 3) / (8 * base.c * base.c * base.L * base.L);
  CHECK(curve.back().systemAverage == doctest::Approx(iso).epsilon(1e-12));
  CHECK(curve.back().regionAverage == doctest::Approx(iso).epsilon(1e-12));
  for (std::size_t i = 1; i + 1 < curve.size(); ++i)
    CHECK(curve[i].regionAverage > curve[i - 1].regionAverage);

  // Independent quadrature of the region average.
  boost::math::quadrature::tanh_sinh<double> ts;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    HeatwaveParams p = base;
    p.v = vs[i];
    double tq = 0.5 * (lx - 1) / p.v;
    auto f = [&](double x) { return heatwaveDensity(x, tq, p); };
    double edge = std::min(p.c * tq, w);
    double sum = ts.integrate(f, 0.0, edge);
    if (edge < w) sum += ts.integrate(f, edge, w);
    CHECK(std::abs(sum / w - curve[i].regionAverage) < 1e-8 * curve[i].regionAverage);
    CHECK(curve[i].systemAverage ==
          doctest::Approx((lx - 1) / lx * meanAngularEnergy(p)).epsilon(1e-12));
  }
}
