#pragma once

#include "stq/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace stq {

enum class BondKind : std::uint8_t { X, Y };

// Nearest-neighbour bond between two chain sites, first < second.
struct Bond {
  int first;
  int second;
  BondKind kind;
};

/// Lx x Ly cylinder with a column-major snake ordering of the sites.
///
/// Column x (0-based) holds chain sites x*Ly .. x*Ly+Ly-1; even columns run
/// y = 0..Ly-1 and odd columns run backwards, so a quench front that depends
/// only on x is contiguous along the chain. With yPeriodic and Ly >= 3 the
/// wrap bond (Ly-1, 0) is added in every column; Ly = 2 keeps a single
/// y-bond per column.
class LatticeGeometry {
 public:
  LatticeGeometry(int lx, int ly, bool yPeriodic = true);

  static LatticeGeometry chain(int length) { return LatticeGeometry(length, 1, false); }

  int lx() const { return lx_; }
  int ly() const { return ly_; }
  int size() const { return lx_ * ly_; }
  bool yPeriodic() const { return yPeriodic_; }

  int siteIndex(int x, int y) const;
  std::pair<int, int> coords(int site) const;

  // Centered coordinate x_i = i - (Lx-1)/2 in lattice units.
  double xCoord(int x) const { return x - 0.5 * (lx_ - 1); }
  // Midpoint of the x-bond between columns x and x+1.
  double xBondCoord(int x) const { return xCoord(x) + 0.5; }

  // Chain bond (between chain sites b and b+1) separating column x from x+1.
  int xBondCut(int x) const { return (x + 1) * ly_ - 1; }

  const std::vector<Bond>& bonds() const { return bonds_; }

  // Distinct y-bonds (row pairs) inside one column.
  std::vector<std::pair<int, int>> columnRowPairs() const;

 private:
  int lx_;
  int ly_;
  bool yPeriodic_;
  std::vector<Bond> bonds_;
};

/// Parameters of the time-dependent Hamiltonian
///   H(t) = -J (sum_<ij> X_i X_j + gc sum_i Z_i) - h sum_i f_i(t) Z_i.
struct ModelParams {
  double J = 1.0;
  double gc = 3.04438;
  double h = 5.0 * 3.04438;
  double v = 1.0;
  double tau = 0.4;

  double t0() const { return -2.0 * tau; }
  void validate() const;
};

// f(x, t) = 1/2 + 1/2 tanh[(|x| - v t) / (v tau)]; tau = 0 gives the sharp step.
double frontProfile(double x, double t, double v, double tau);

// Spatially uniform ramp 1/2 + 1/2 tanh(-t / tau), the v -> infinity limit.
double uniformProfile(double t, double tau);

// Coefficient of -Z at a site with centered coordinate x: J gc + h f(x, t).
double transverseField(double x, double t, const ModelParams& params);

// Per-site field coefficients at time t in chain order.
std::vector<double> fieldsAt(const LatticeGeometry& geometry, const ModelParams& params, double t);
std::vector<double> uniformFieldsAt(const LatticeGeometry& geometry, const ModelParams& params,
                                    double t);

// ---------------------------------------------------------------------------
// Pauli-string operators

enum class Pauli : std::uint8_t { I, X, Y, Z };

struct PauliFactor {
  int site;
  Pauli op;
};

struct PauliTerm {
  double coef = 0.0;
  std::vector<PauliFactor> factors;  // sorted by site, at most one factor per site
};

using PauliSum = std::vector<PauliTerm>;

template <class T>
Op2<T> pauliMatrix(Pauli p);

// H = -J sum_bonds X X - sum_i fields[i] Z_i.
PauliSum hamiltonianTerms(const LatticeGeometry& geometry, std::span<const double> fields,
                          double J);

/// Bond-local energy operator h_{i,j} attached to the x-bond (column, column+1)
/// in row `row`.
struct LocalEnergyOperator {
  int column;
  int row;
  double x;  // bond midpoint coordinate
  PauliSum terms;
};

/// Splits H into bond-local pieces whose sum is exactly H.
///
/// Each field term is shared equally between the x-bond columns touching its
/// site; each y-bond is shared between those bond columns and, inside a bond
/// column, between the two rows it touches. At the first and last columns the
/// missing neighbour's share goes to the single adjacent bond column.
std::vector<LocalEnergyOperator> localEnergyOperators(const LatticeGeometry& geometry,
                                                      std::span<const double> fields, double J);

// Upper bound on the operator norm, sum of |coef|.
double normBound(const PauliSum& terms);

}  // namespace stq
