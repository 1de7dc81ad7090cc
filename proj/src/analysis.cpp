#include "stq/analysis.hpp"

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace stq {

double pseudoCriticalField(double ly) {
  if (!(ly >= 1.0)) throw InvalidArgument("Ly must be >= 1");
  return CriticalConstants::gcInf +
         CriticalConstants::aShift * std::pow(ly, -1.0 / CriticalConstants::nu);
}

// ---------------------------------------------------------------------------
// Collapse

namespace {

// Cubic through the four samples nearest to x (fewer on short curves).
double interpolate(const Curve& c, double x) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(c.x.size());
  std::ptrdiff_t hi = std::upper_bound(c.x.begin(), c.x.end(), x) - c.x.begin();
  hi = std::clamp<std::ptrdiff_t>(hi, 1, n - 1);
  const std::ptrdiff_t width = std::min<std::ptrdiff_t>(4, n);
  std::ptrdiff_t first = std::clamp<std::ptrdiff_t>(hi - width / 2, 0, n - width);
  double sum = 0.0;
  for (std::ptrdiff_t i = first; i < first + width; ++i) {
    double w = 1.0;
    for (std::ptrdiff_t j = first; j < first + width; ++j)
      if (j != i) w *= (x - c.x[j]) / (c.x[i] - c.x[j]);
    sum += w * c.y[i];
  }
  return sum;
}

// Mean of (ya - yb)^2 over the overlap; negative when there is none.
// The difference is a cubic between merged knots, so four-point
// Gauss-Legendre integrates its square exactly.
double pairDistance(const Curve& a, const Curve& b) {
  double lo = std::max(a.x.front(), b.x.front());
  double hi = std::min(a.x.back(), b.x.back());
  if (!(hi > lo)) return -1.0;
  std::vector<double> knots{lo, hi};
  for (const Curve* c : {&a, &b})
    for (double x : c->x)
      if (x > lo && x < hi) knots.push_back(x);
  std::sort(knots.begin(), knots.end());
  static constexpr double nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                      0.3399810435848563, 0.8611363115940526};
  static constexpr double weights[4] = {0.3478548451374538, 0.6521451548625461,
                                        0.6521451548625461, 0.3478548451374538};
  double sum = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    double h = knots[i] - knots[i - 1];
    if (h <= 0) continue;
    double mid = 0.5 * (knots[i] + knots[i - 1]);
    for (int q = 0; q < 4; ++q) {
      double x = mid + 0.5 * h * nodes[q];
      double d = interpolate(a, x) - interpolate(b, x);
      sum += 0.5 * h * weights[q] * d * d;
    }
  }
  return sum / (hi - lo);
}

template <class Point, class Fx, class Fy>
std::vector<Curve> groupCurves(std::span<const Point> data, Fx fx, Fy fy) {
  std::map<double, std::vector<std::pair<double, double>>> bySize;
  for (const auto& p : data) bySize[p.ly].push_back({fx(p), fy(p)});
  std::vector<Curve> out;
  for (auto& [size, pts] : bySize) {
    std::sort(pts.begin(), pts.end());
    Curve c;
    c.size = size;
    for (auto [x, y] : pts) {
      c.x.push_back(x);
      c.y.push_back(y);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

double collapseResidual(std::span<const Curve> curves) {
  if (curves.size() < 2) throw AnalysisError("collapse needs at least two curves");
  double meanSquare = 0.0;
  std::size_t count = 0;
  for (const auto& c : curves) {
    if (c.x.size() < 2 || c.x.size() != c.y.size()) {
      throw AnalysisError("each curve needs at least two points");
    }
    for (double y : c.y) meanSquare += y * y;
    count += c.y.size();
  }
  meanSquare /= static_cast<double>(count);
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t j = i + 1; j < curves.size(); ++j) {
      double d = pairDistance(curves[i], curves[j]);
      if (d < 0) continue;
      sum += d;
      ++pairs;
    }
  if (pairs == 0) throw AnalysisError("rescaled curves do not overlap");
  if (meanSquare == 0.0) return 0.0;
  return sum / pairs / meanSquare;
}

std::vector<Curve> gapCollapseCurves(std::span<const GapPoint> data, double gc, double nu,
                                     double z) {
  if (!(nu > 0)) throw InvalidArgument("nu must be > 0");
  for (const auto& p : data)
    if (!(p.gap > 0)) throw InvalidArgument("gaps must be positive");
  return groupCurves(
      data, [&](const GapPoint& p) { return (p.g - gc) * std::pow(p.ly, 1.0 / nu); },
      [&](const GapPoint& p) { return p.gap * std::pow(p.ly, z); });
}

double gapCollapse(std::span<const GapPoint> data, double gc, double nu, double z) {
  auto curves = gapCollapseCurves(data, gc, nu, z);
  return collapseResidual(curves);
}

namespace {

struct GapObjective {
  std::span<const GapPoint> data;
  double z;
};

double gapObjective(const gsl_vector* v, void* params) {
  const auto* o = static_cast<const GapObjective*>(params);
  double gc = gsl_vector_get(v, 0);
  double nu = gsl_vector_get(v, 1);
  if (!(nu > 0.05)) return 1e10;
  try {
    return gapCollapse(o->data, gc, nu, o->z);
  } catch (const AnalysisError&) {
    return 1e10;
  }
}

}  // namespace

CollapseFit fitGapCollapse(std::span<const GapPoint> data, double gcStart, double nuStart,
                           double z) {
  gapCollapse(data, gcStart, nuStart, z);  // validates the data set
  GapObjective objective{data, z};
  gsl_multimin_function fn{&gapObjective, 2, &objective};
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, gcStart);
  gsl_vector_set(x, 1, nuStart);
  gsl_vector_set(step, 0, 0.05 * std::max(std::abs(gcStart), 0.1));
  gsl_vector_set(step, 1, 0.05 * nuStart);
  gsl_multimin_fminimizer* m =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  CollapseFit fit;
  int status = GSL_CONTINUE;
  for (fit.iterations = 0; fit.iterations < 5000 && status == GSL_CONTINUE; ++fit.iterations) {
    if (gsl_multimin_fminimizer_iterate(m)) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-10);
  }
  fit.gc = gsl_vector_get(m->x, 0);
  fit.nu = gsl_vector_get(m->x, 1);
  fit.residual = m->fval;
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return fit;
}

std::vector<Curve> correlationCollapseCurves(std::span<const CorrelationPoint> data,
                                             double twoDelta) {
  return groupCurves(
      data, [](const CorrelationPoint& p) { return p.r / p.ly; },
      [&](const CorrelationPoint& p) { return std::pow(p.ly, twoDelta) * p.cx; });
}

double correlationCollapse(std::span<const CorrelationPoint> data, double twoDelta) {
  auto curves = correlationCollapseCurves(data, twoDelta);
  return collapseResidual(curves);
}

ExponentFit fitCorrelationExponent(std::span<const CorrelationPoint> data, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("empty exponent bracket");
  auto f = [&](double e) { return correlationCollapse(data, e); };
  auto [best, value] = boost::math::tools::brent_find_minima(f, lo, hi, 50);
  return {best, value};
}

// ---------------------------------------------------------------------------
// Fronts

LinearFit linearFit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw AnalysisError("linear fit needs two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw AnalysisError("linear fit with a single abscissa");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    double s2 = rss / (n - 2);
    fit.slopeError = std::sqrt(s2 / sxx);
    fit.interceptError = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return fit;
}

namespace {

LinearFit frontFit(const EntropyMap& map, double threshold, double origin,
                   std::vector<double>* times, std::vector<double>* positions) {
  const Index nt = map.entropy.rows();
  const Index nb = map.entropy.cols();
  if (nt != static_cast<Index>(map.times.size()) || nb != static_cast<Index>(map.bondX.size())) {
    throw InvalidArgument("entropy map dimensions do not match its axes");
  }
  double edge = 0.0;
  for (double x : map.bondX) edge = std::max(edge, std::abs(x - origin));
  std::vector<double> ts, xs;
  for (Index k = 1; k < nt; ++k) {
    double front = -1.0;
    for (Index b = 0; b < nb; ++b) {
      if (map.entropy(k, b) - map.entropy(0, b) > threshold) {
        front = std::max(front, std::abs(map.bondX[b] - origin));
      }
    }
    if (front < 0 || front >= edge) continue;
    ts.push_back(map.times[k]);
    xs.push_back(front);
  }
  if (ts.size() < 2) throw AnalysisError("no propagating front above the threshold");
  if (times) *times = ts;
  if (positions) *positions = xs;
  return linearFit(ts, xs);
}

}  // namespace

VelocityEstimate velocityFromFront(const EntropyMap& map, double threshold, double origin) {
  VelocityEstimate out;
  LinearFit fit = frontFit(map, threshold, origin, &out.frontTimes, &out.frontPositions);
  out.c = fit.slope;
  out.intercept = fit.intercept;
  out.fitError = fit.slopeError;
  for (double factor : {0.8, 1.2}) {
    try {
      LinearFit alt = frontFit(map, factor * threshold, origin, nullptr, nullptr);
      out.thresholdSpread = std::max(out.thresholdSpread, std::abs(alt.slope - out.c));
    } catch (const AnalysisError&) {
    }
  }
  out.uncertainty = std::hypot(out.fitError, out.thresholdSpread);
  return out;
}

// ---------------------------------------------------------------------------
// Power law

namespace {

struct PowerLawFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VecR;
  using ValueType = VecR;
  using JacobianType = MatR;

  const std::vector<EnergyPoint>& data;
  int inputs() const { return 3; }
  int values() const { return static_cast<int>(data.size()); }

  int operator()(const VecR& p, VecR& f) const {
    for (int i = 0; i < values(); ++i)
      f(i) = p(0) + p(1) * std::pow(data[i].ly, -p(2)) - data[i].eps0;
    return 0;
  }
  int df(const VecR& p, MatR& j) const {
    for (int i = 0; i < values(); ++i) {
      double l = data[i].ly;
      double power = std::pow(l, -p(2));
      j(i, 0) = 1.0;
      j(i, 1) = power;
      j(i, 2) = -p(1) * power * std::log(l);
    }
    return 0;
  }
};

// Linear least squares for (Q', b') at fixed p; returns the rss.
double fixedExponentFit(const std::vector<EnergyPoint>& data, double p, double& q, double& b) {
  MatR a(data.size(), 2);
  VecR y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::pow(data[i].ly, -p);
    y(i) = data[i].eps0;
  }
  VecR sol = a.colPivHouseholderQr().solve(y);
  q = sol(0);
  b = sol(1);
  return (a * sol - y).squaredNorm();
}

std::size_t distinctSizes(const std::vector<EnergyPoint>& data) {
  std::set<double> s;
  for (const auto& p : data) s.insert(p.ly);
  return s.size();
}

PowerLawFit fitOnce(const std::vector<EnergyPoint>& data) {
  PowerLawFit out;
  // Coarse scan of the exponent seeds the damped least squares.
  double bestP = 1.0, bestRss = INFINITY, q = 0, b = 0;
  for (double p = 0.1; p <= 6.0; p += 0.05) {
    double qq, bb;
    double rss = fixedExponentFit(data, p, qq, bb);
    if (rss < bestRss) {
      bestRss = rss;
      bestP = p;
      q = qq;
      b = bb;
    }
  }
  double scale = 0.0;
  for (const auto& d : data) scale = std::max(scale, std::abs(d.eps0));
  if (std::abs(b) <= 1e-10 * std::max(1.0, scale)) {
    out.qPrime = q;
    out.bPrime = b;
    out.exponent = bestP;
    out.degenerate = true;
    out.rms = std::sqrt(bestRss / data.size());
    return out;
  }
  VecR p(3);
  p << q, b, bestP;
  PowerLawFunctor functor{data};
  Eigen::LevenbergMarquardt<PowerLawFunctor> lm(functor);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.maxfev = 2000;
  auto status = lm.minimize(p);
  out.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall;
  out.qPrime = p(0);
  out.bPrime = p(1);
  out.exponent = p(2);
  VecR f(data.size());
  functor(p, f);
  out.rms = std::sqrt(f.squaredNorm() / data.size());
  return out;
}

double halfWidth68(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  std::sort(v.begin(), v.end());
  auto at = [&](double q) { return v[static_cast<std::size_t>(q * (v.size() - 1))]; };
  return 0.5 * (at(0.84) - at(0.16));
}

}  // namespace

PowerLawFit energyDensityScalingFit(std::span<const EnergyPoint> data, int resamples,
                                    std::uint64_t seed) {
  std::vector<EnergyPoint> pts(data.begin(), data.end());
  if (distinctSizes(pts) < 4) throw AnalysisError("power-law fit needs four distinct Ly");
  PowerLawFit out = fitOnce(pts);
  if (out.degenerate || resamples <= 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::vector<double> qs, bs, ps;
  for (int r = 0; r < resamples; ++r) {
    std::vector<EnergyPoint> sample;
    for (std::size_t i = 0; i < pts.size(); ++i) sample.push_back(pts[pick(rng)]);
    if (distinctSizes(sample) < 4) continue;
    PowerLawFit f = fitOnce(sample);
    if (f.degenerate) continue;
    qs.push_back(f.qPrime);
    bs.push_back(f.bPrime);
    ps.push_back(f.exponent);
  }
  out.qError = halfWidth68(qs);
  out.bError = halfWidth68(bs);
  out.exponentError = halfWidth68(ps);
  return out;
}

PowerLawFit energyDensityScalingFitFixed(std::span<const EnergyPoint> data, double exponent) {
  std::vector<EnergyPoint> pts(data.begin(), data.end());
  if (distinctSizes(pts) < 2) throw AnalysisError("fixed-exponent fit needs two distinct Ly");
  PowerLawFit out;
  out.exponent = exponent;
  double rss = fixedExponentFit(pts, exponent, out.qPrime, out.bPrime);
  out.rms = std::sqrt(rss / pts.size());
  out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------
// Area law

AreaLawFit entropyAreaLawFit(std::span<const EntropyPoint> data) {
  std::set<double> sizes;
  for (const auto& p : data) {
    if (!(p.ly > 0)) throw InvalidArgument("Ly must be positive");
    sizes.insert(p.ly);
  }
  if (sizes.size() < 3) throw AnalysisError("area-law fit needs three distinct Ly");
  const Index n = static_cast<Index>(data.size());
  MatR a(n, 3);
  VecR y(n);
  for (Index i = 0; i < n; ++i) {
    a(i, 0) = data[i].ly;
    a(i, 1) = std::log(data[i].ly);
    a(i, 2) = 1.0;
    y(i) = data[i].svn;
  }
  Eigen::JacobiSVD<MatR> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecR& s = svd.singularValues();
  AreaLawFit out;
  out.collinear = s(2) < 1e-10 * s(0);
  VecR sol = svd.solve(y);
  out.a = sol(0);
  out.b = sol(1);
  out.c = sol(2);
  out.residuals = y - a * sol;
  out.rss = out.residuals.squaredNorm();
  MatR lin(n, 2);
  lin.col(0) = a.col(0);
  lin.col(1) = a.col(2);
  VecR solLin = lin.colPivHouseholderQr().solve(y);
  out.rssLinear = (y - lin * solLin).squaredNorm();
  if (n > 3) {
    double denom = out.rss / static_cast<double>(n - 3);
    out.fStatistic = denom > 0 ? (out.rssLinear - out.rss) / denom : INFINITY;
  }
  return out;
}

}  // namespace stq
