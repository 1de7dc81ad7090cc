#include "stq/heatwave.hpp"

#include "stq/types.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stq {

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double integrate(F f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-12);
}

// Angle where m / eta(theta) crosses 1 / tau; eps(theta) has a kink there.
double cutoffKink(const HeatwaveParams& p) {
  if (!(p.tau > 0)) return -1.0;
  double beta = p.beta();
  if (beta <= 0) return -1.0;
  double cosKink = (1.0 - p.m * p.tau / p.gamma()) / beta;
  if (cosKink <= -1.0 || cosKink >= 1.0) return -1.0;
  return std::acos(cosKink);
}

template <class F>
double integrateAngles(F f, double a, double b, const HeatwaveParams& p) {
  double kink = cutoffKink(p);
  if (kink > a && kink < b) return integrate(f, a, kink) + integrate(f, kink, b);
  return integrate(f, a, b);
}

// Angular weight seen at a fixed point: eps(theta) / (1 - beta cos theta).
double fluxWeight(double phi, const HeatwaveParams& p) {
  return angularEnergyDensity(phi, p) / (1.0 - p.beta() * std::cos(phi));
}

}  // namespace

double HeatwaveParams::gamma() const {
  double b = beta();
  return 1.0 / std::sqrt(1.0 - b * b);
}

void HeatwaveParams::validate() const {
  if (!(c > 0)) throw InvalidArgument("c must be > 0");
  if (!(v > c)) throw InvalidArgument("the heatwave model needs v > c");
  if (!(m > 0)) throw InvalidArgument("m must be > 0");
  if (!(tau >= 0)) throw InvalidArgument("tau must be >= 0");
  if (!(L > 0)) throw InvalidArgument("L must be > 0");
  if (!(Lambda > 0)) throw InvalidArgument("Lambda must be > 0");
}

double dopplerFactor(double theta, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("Doppler factor needs 0 <= beta < 1");
  if (!(theta >= 0.0 && theta <= kPi)) throw InvalidArgument("theta must lie in [0, pi]");
  return (1.0 - beta * std::cos(theta)) / std::sqrt(1.0 - beta * beta);
}

double modePopulation(double k, double theta, const HeatwaveParams& p) {
  if (!(k > 0)) throw InvalidArgument("k must be > 0");
  double x = dopplerFactor(theta, p.beta()) * p.c * k / p.m;  // eta w / m
  if (x <= 1.0) return 1.0 / (4.0 * x);
  return 0.25 * std::exp(-2.0 * (x - 1.0));
}

double momentumCutoff(double theta, const HeatwaveParams& p) {
  double eta = dopplerFactor(theta, p.beta());
  double k = p.m / (eta * p.c);
  if (p.tau > 0) k = std::min(k, 1.0 / (p.c * p.tau));
  return std::min(k, p.Lambda);
}

double angularEnergyDensity(double theta, const HeatwaveParams& p) {
  double eta = dopplerFactor(theta, p.beta());
  double k = momentumCutoff(theta, p);
  return p.m * k * k / (8.0 * eta * p.L * p.L);
}

double angularEnergyDensityQuadrature(double theta, const HeatwaveParams& p) {
  double k = momentumCutoff(theta, p);
  auto integrand = [&](double q) { return q > 0 ? p.c * q * modePopulation(q, theta, p) * q : 0.0; };
  return integrate(integrand, 0.0, k) / (p.L * p.L);
}

double meanAngularEnergy(const HeatwaveParams& p) {
  return integrateAngles([&](double t) { return angularEnergyDensity(t, p); }, 0.0, kPi, p) / kPi;
}

double heatwaveDensity(double x, double tq, const HeatwaveParams& p) {
  p.validate();
  if (!(tq > 0)) throw InvalidArgument("tq must be > 0");
  if (std::abs(x) > p.v * tq) return 0.0;
  // The front moving to +x reaches x with emission angles in [phi0, pi],
  // the other front (after phi -> pi - phi) with angles in [pi - phi0, pi].
  double r = std::clamp(x / (p.c * tq), -1.0, 1.0);
  double phi0 = std::acos(r);
  auto f = [&](double phi) { return fluxWeight(phi, p); };
  return (integrateAngles(f, phi0, kPi, p) + integrateAngles(f, kPi - phi0, kPi, p)) / kPi;
}

std::vector<double> spatialEnergyProfile(std::span<const double> xGrid, double tq,
                                         const HeatwaveParams& params) {
  std::vector<double> out;
  out.reserve(xGrid.size());
  for (double x : xGrid) out.push_back(heatwaveDensity(x, tq, params));
  return out;
}

double hotPlateauCenter(double tq, const HeatwaveParams& p) { return 0.5 * (p.c + p.v) * tq; }

std::vector<double> normalizedEnergyProfile(std::span<const double> xGrid, double tq,
                                            const HeatwaveParams& params,
                                            double plateauReference) {
  double hot = heatwaveDensity(hotPlateauCenter(tq, params), tq, params);
  auto out = spatialEnergyProfile(xGrid, tq, params);
  for (double& e : out) e *= plateauReference / hot;
  return out;
}

double etaFactorPrediction(const HeatwaveParams& p) {
  return angularEnergyDensity(kPi, p) / angularEnergyDensity(0.0, p);
}

std::vector<VelocityPoint> energyVsVelocity(std::span<const double> velocities,
                                            const HeatwaveParams& base, double lx,
                                            double regionHalfWidth) {
  if (!(lx > 1)) throw InvalidArgument("lx must be > 1");
  if (!(regionHalfWidth > 0)) throw InvalidArgument("region half width must be > 0");
  std::vector<VelocityPoint> out;
  for (double v : velocities) {
    HeatwaveParams p = base;
    VelocityPoint point;
    point.v = v;
    if (std::isinf(v)) {
      // All points emit at once and nothing has propagated yet.
      p.v = std::numeric_limits<double>::max();
      double mean = meanAngularEnergy(p);
      point.systemAverage = mean;
      point.regionAverage = mean;
      out.push_back(point);
      continue;
    }
    p.v = v;
    p.validate();
    double tq = 0.5 * (lx - 1.0) / v;
    // Swept length 2 v tq times the emitted energy per unit length.
    point.systemAverage = (2.0 * v * tq / lx) * meanAngularEnergy(p);
    double w = std::min(regionHalfWidth, v * tq);
    std::vector<double> cuts{0.0, w};
    if (p.c * tq < w) cuts.insert(cuts.begin() + 1, p.c * tq);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      sum += integrate([&](double x) { return heatwaveDensity(x, tq, p); }, cuts[i], cuts[i + 1]);
    point.regionAverage = 2.0 * sum / (2.0 * regionHalfWidth);
    out.push_back(point);
  }
  return out;
}

}  // namespace stq
