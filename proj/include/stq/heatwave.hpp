#pragma once

#include <limits>
#include <span>
#include <vector>

namespace stq {

/// Free-boson heatwave model of a superluminal quench front.
///
/// Lengths are in lattice units, c and v in lattice units per unit time,
/// m and 1/tau in energy units (hbar = 1). tau = 0 means no UV control.
struct HeatwaveParams {
  double c = 1.0;
  double v = 2.0;
  double m = 1.0;
  double tau = 0.0;
  double L = 1.0;
  double Lambda = std::numeric_limits<double>::infinity();  // momentum cutoff

  double beta() const { return c / v; }
  double gamma() const;
  void validate() const;
};

// eta(theta) = gamma (1 - beta cos theta).
double dopplerFactor(double theta, double beta);

/// Mode population at momentum k > 0 emitted at angle theta: m / (4 eta w)
/// up to eta w = m, then (1/4) exp(-2 (eta w / m - 1)), which is continuous
/// at the crossover.
double modePopulation(double k, double theta, const HeatwaveParams& params);

// Upper momentum of the energy integral: min(m / (eta c), 1 / (c tau), Lambda).
double momentumCutoff(double theta, const HeatwaveParams& params);

/// epsilon(theta) = (1/L^2) int_0^K w_k N(k) k dk in closed form; equals
/// m^3 / (8 c^2 eta^3 L^2) when the infrared cutoff is the active one.
double angularEnergyDensity(double theta, const HeatwaveParams& params);

// The same integral by adaptive quadrature of modePopulation.
double angularEnergyDensityQuadrature(double theta, const HeatwaveParams& params);

// (1/pi) int_0^pi epsilon(theta) d theta: energy per unit swept length.
double meanAngularEnergy(const HeatwaveParams& params);

/// Energy density at time tq after two fronts left x = 0 at t = 0 moving to
/// +-v t. Every swept point emits epsilon(theta) d phi / (2 pi) into
/// direction phi; the result is integrated over the transverse direction.
/// Requires v > c.
double heatwaveDensity(double x, double tq, const HeatwaveParams& params);

std::vector<double> spatialEnergyProfile(std::span<const double> xGrid, double tq,
                                         const HeatwaveParams& params);

// Centre of the hot plateau c tq < |x| < v tq.
double hotPlateauCenter(double tq, const HeatwaveParams& params);

// Profile rescaled so that its hot-plateau value equals `plateauReference`.
std::vector<double> normalizedEnergyProfile(std::span<const double> xGrid, double tq,
                                            const HeatwaveParams& params,
                                            double plateauReference);

// Cold-to-hot ratio expected from the Doppler factors alone: eps(pi) / eps(0).
double etaFactorPrediction(const HeatwaveParams& params);

struct VelocityPoint {
  double v = 0.0;
  double systemAverage = 0.0;
  double regionAverage = 0.0;
};

/// Energy density versus front velocity at tq = (lx - 1) / (2 v): the
/// whole-system average and the average over |x| <= regionHalfWidth.
/// v = +infinity is accepted and gives the uniform-quench value.
std::vector<VelocityPoint> energyVsVelocity(std::span<const double> velocities,
                                            const HeatwaveParams& base, double lx,
                                            double regionHalfWidth);

}  // namespace stq
