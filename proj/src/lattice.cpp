#include "stq/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stq {

namespace {

void requireFinite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw InvalidArgument(std::string(what) + " must be finite");
  }
}

}  // namespace

LatticeGeometry::LatticeGeometry(int lx, int ly, bool yPeriodic)
    : lx_(lx), ly_(ly), yPeriodic_(yPeriodic) {
  if (lx < 2) throw InvalidArgument("Lx must be >= 2");
  if (ly < 1) throw InvalidArgument("Ly must be >= 1");
  if (ly == 1 && yPeriodic) throw InvalidArgument("Ly = 1 cannot be y-periodic (self-bond)");

  for (int x = 0; x < lx_; ++x) {
    for (auto [r1, r2] : columnRowPairs()) {
      int a = siteIndex(x, r1);
      int b = siteIndex(x, r2);
      bonds_.push_back({std::min(a, b), std::max(a, b), BondKind::Y});
    }
    if (x + 1 < lx_) {
      for (int y = 0; y < ly_; ++y) {
        int a = siteIndex(x, y);
        int b = siteIndex(x + 1, y);
        bonds_.push_back({std::min(a, b), std::max(a, b), BondKind::X});
      }
    }
  }
}

int LatticeGeometry::siteIndex(int x, int y) const {
  if (x < 0 || x >= lx_ || y < 0 || y >= ly_) throw InvalidArgument("site out of range");
  return x * ly_ + ((x % 2 == 0) ? y : ly_ - 1 - y);
}

std::pair<int, int> LatticeGeometry::coords(int site) const {
  if (site < 0 || site >= size()) throw InvalidArgument("site out of range");
  int x = site / ly_;
  int offset = site % ly_;
  return {x, (x % 2 == 0) ? offset : ly_ - 1 - offset};
}

std::vector<std::pair<int, int>> LatticeGeometry::columnRowPairs() const {
  std::vector<std::pair<int, int>> pairs;
  for (int y = 0; y + 1 < ly_; ++y) pairs.emplace_back(y, y + 1);
  if (yPeriodic_ && ly_ >= 3) pairs.emplace_back(ly_ - 1, 0);
  return pairs;
}

void ModelParams::validate() const {
  requireFinite(J, "J");
  requireFinite(gc, "gc");
  requireFinite(h, "h");
  requireFinite(v, "v");
  requireFinite(tau, "tau");
  if (!(J > 0)) throw InvalidArgument("J must be positive");
  if (h < 0) throw InvalidArgument("h must be non-negative");
  if (!(v > 0)) throw InvalidArgument("v must be positive");
  if (tau < 0) throw InvalidArgument("tau must be non-negative");
}

double frontProfile(double x, double t, double v, double tau) {
  requireFinite(x, "x");
  requireFinite(t, "t");
  requireFinite(v, "v");
  requireFinite(tau, "tau");
  if (!(v > 0)) throw InvalidArgument("front velocity must be positive");
  if (tau < 0) throw InvalidArgument("tau must be non-negative");
  double distance = std::abs(x) - v * t;
  if (tau == 0.0) return distance > 0 ? 1.0 : 0.0;
  // 1/2 + 1/2 tanh(u) written as a logistic to avoid cancellation for u << 0.
  double u = distance / (v * tau);
  return 1.0 / (1.0 + std::exp(-2.0 * u));
}

double uniformProfile(double t, double tau) {
  requireFinite(t, "t");
  requireFinite(tau, "tau");
  if (tau < 0) throw InvalidArgument("tau must be non-negative");
  if (tau == 0.0) return t < 0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(2.0 * t / tau));
}

double transverseField(double x, double t, const ModelParams& params) {
  return params.J * params.gc + params.h * frontProfile(x, t, params.v, params.tau);
}

std::vector<double> fieldsAt(const LatticeGeometry& geometry, const ModelParams& params, double t) {
  std::vector<double> fields(geometry.size());
  for (int site = 0; site < geometry.size(); ++site) {
    fields[site] = transverseField(geometry.xCoord(geometry.coords(site).first), t, params);
  }
  return fields;
}

std::vector<double> uniformFieldsAt(const LatticeGeometry& geometry, const ModelParams& params,
                                    double t) {
  double value = params.J * params.gc + params.h * uniformProfile(t, params.tau);
  return std::vector<double>(geometry.size(), value);
}

template <class T>
Op2<T> pauliMatrix(Pauli p) {
  switch (p) {
    case Pauli::I:
      return identity2<T>();
    case Pauli::X:
      return pauliX<T>();
    case Pauli::Z:
      return pauliZ<T>();
    case Pauli::Y:
      if constexpr (std::is_same_v<T, cd>) {
        return pauliY();
      } else {
        throw InvalidArgument("Pauli Y has no real representation");
      }
  }
  throw InvalidArgument("unknown Pauli");
}

template Op2<double> pauliMatrix<double>(Pauli);
template Op2<cd> pauliMatrix<cd>(Pauli);

PauliSum hamiltonianTerms(const LatticeGeometry& geometry, std::span<const double> fields,
                          double J) {
  if (static_cast<int>(fields.size()) != geometry.size()) {
    throw InvalidArgument("field vector length does not match the lattice");
  }
  PauliSum terms;
  for (const Bond& bond : geometry.bonds()) {
    terms.push_back({-J, {{bond.first, Pauli::X}, {bond.second, Pauli::X}}});
  }
  for (int site = 0; site < geometry.size(); ++site) {
    requireFinite(fields[site], "field");
    terms.push_back({-fields[site], {{site, Pauli::Z}}});
  }
  return terms;
}

std::vector<LocalEnergyOperator> localEnergyOperators(const LatticeGeometry& geometry,
                                                      std::span<const double> fields, double J) {
  const int lx = geometry.lx();
  const int ly = geometry.ly();
  if (lx < 2) throw InvalidArgument("local energy operators need Lx >= 2");
  if (static_cast<int>(fields.size()) != geometry.size()) {
    throw InvalidArgument("field vector length does not match the lattice");
  }

  std::vector<LocalEnergyOperator> ops;
  ops.reserve((lx - 1) * ly);
  auto rowPairs = geometry.columnRowPairs();

  for (int i = 0; i + 1 < lx; ++i) {
    for (int j = 0; j < ly; ++j) {
      LocalEnergyOperator op{i, j, geometry.xBondCoord(i), {}};
      int left = geometry.siteIndex(i, j);
      int right = geometry.siteIndex(i + 1, j);
      op.terms.push_back({-J, {{std::min(left, right), Pauli::X}, {std::max(left, right), Pauli::X}}});

      for (int column : {i, i + 1}) {
        // Share of this column carried by bond column i.
        bool boundary = (column == 0) || (column == lx - 1);
        double columnShare = boundary ? 1.0 : 0.5;
        int site = geometry.siteIndex(column, j);
        op.terms.push_back({-columnShare * fields[site], {{site, Pauli::Z}}});
        for (auto [r1, r2] : rowPairs) {
          if (r1 != j && r2 != j) continue;
          int a = geometry.siteIndex(column, r1);
          int b = geometry.siteIndex(column, r2);
          op.terms.push_back(
              {-J * columnShare * 0.5, {{std::min(a, b), Pauli::X}, {std::max(a, b), Pauli::X}}});
        }
      }
      ops.push_back(std::move(op));
    }
  }
  return ops;
}

double normBound(const PauliSum& terms) {
  double total = 0.0;
  for (const auto& term : terms) total += std::abs(term.coef);
  return total;
}

}  // namespace stq
