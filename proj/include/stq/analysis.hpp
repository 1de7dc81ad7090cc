#pragma once

#include "stq/types.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace stq {

// Thrown when a data set cannot support the requested fit.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CriticalConstants {
  static constexpr double gcInf = 3.04438;
  static constexpr double nu = 0.629971;
  static constexpr double z = 1.0;
  static constexpr double etaAnom = 0.036298;
  static constexpr double aShift = -2.88;
  static constexpr double twoDelta() { return 1.0 + etaAnom; }
};

/// gc(Ly) = gcInf + aShift * Ly^(-1/nu). Defined for Ly >= 1; values below
/// Ly = 2 are plain extrapolations of the formula.
double pseudoCriticalField(double ly);

// ---------------------------------------------------------------------------
// Scaling collapse

struct Curve {
  double size = 0.0;      // Ly
  std::vector<double> x;  // ascending after rescaling
  std::vector<double> y;
};

/// Mean squared distance between piecewise-cubic interpolated curves on their
/// pairwise overlaps, averaged over overlapping pairs and divided by the
/// mean square of all y values. Throws AnalysisError when fewer than two
/// curves or no pair overlaps.
double collapseResidual(std::span<const Curve> curves);

struct GapPoint {
  double ly;
  double g;
  double gap;
};

// Curves (g - gc) Ly^(1/nu)  ->  gap Ly^z, one per Ly.
std::vector<Curve> gapCollapseCurves(std::span<const GapPoint> data, double gc, double nu,
                                     double z);
double gapCollapse(std::span<const GapPoint> data, double gc, double nu, double z);

struct CollapseFit {
  double gc = 0.0;
  double nu = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Minimizes the gap-collapse residual over (gc, nu) with a Nelder-Mead simplex.
CollapseFit fitGapCollapse(std::span<const GapPoint> data, double gcStart, double nuStart,
                           double z);

struct CorrelationPoint {
  double ly;
  double r;
  double cx;
};

// Curves r / Ly  ->  Ly^(2 Delta) Cx.
std::vector<Curve> correlationCollapseCurves(std::span<const CorrelationPoint> data,
                                             double twoDelta);
double correlationCollapse(std::span<const CorrelationPoint> data, double twoDelta);

struct ExponentFit {
  double value = 0.0;
  double residual = 0.0;
};

// Brent minimization of the correlation-collapse residual over [lo, hi].
ExponentFit fitCorrelationExponent(std::span<const CorrelationPoint> data, double lo, double hi);

// ---------------------------------------------------------------------------
// Light-cone front

struct EntropyMap {
  std::vector<double> times;  // ascending, times[0] is the reference time
  std::vector<double> bondX;  // bond positions
  MatR entropy;               // times x bonds
};

struct VelocityEstimate {
  double c = 0.0;
  double uncertainty = 0.0;
  double intercept = 0.0;
  double fitError = 0.0;        // standard error of the slope
  double thresholdSpread = 0.0;  // max |c' - c| for thresholds x0.8 and x1.2
  std::vector<double> frontTimes;
  std::vector<double> frontPositions;
};

/// Front x*(t) = largest |x_b - origin| with S(t, b) - S(t0, b) > threshold;
/// least-squares line through the points where the front has left the
/// origin and not yet reached the edge. Throws AnalysisError without a front.
VelocityEstimate velocityFromFront(const EntropyMap& map, double threshold, double origin);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slopeError = 0.0;
  double interceptError = 0.0;
};

LinearFit linearFit(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Energy density and entropy fits

struct EnergyPoint {
  double ly;
  double eps0;
};

struct PowerLawFit {
  double qPrime = 0.0;
  double bPrime = 0.0;
  double exponent = 0.0;
  // Bootstrap 68% intervals (half widths).
  double qError = 0.0;
  double bError = 0.0;
  double exponentError = 0.0;
  double rms = 0.0;
  bool degenerate = false;  // exponent not identifiable
  bool converged = false;
};

/// eps0 = Q' + b' Ly^(-p) by Levenberg-Marquardt with an analytic Jacobian,
/// plus `resamples` bootstrap refits. Needs at least four distinct Ly.
PowerLawFit energyDensityScalingFit(std::span<const EnergyPoint> data, int resamples = 200,
                                    std::uint64_t seed = 7);

// Same model with p fixed (linear least squares in Q', b').
PowerLawFit energyDensityScalingFitFixed(std::span<const EnergyPoint> data, double exponent);

struct EntropyPoint {
  double ly;
  double svn;
};

struct AreaLawFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  VecR residuals;
  double rss = 0.0;
  double rssLinear = 0.0;  // a Ly + c only
  double fStatistic = 0.0;  // nested-model F test for the log term
  bool collinear = false;
};

// S = a Ly + b ln Ly + c by linear least squares. Needs three distinct Ly.
AreaLawFit entropyAreaLawFit(std::span<const EntropyPoint> data);

}  // namespace stq
