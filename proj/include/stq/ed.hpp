#pragma once

#include "stq/kernels.hpp"
#include "stq/krylov.hpp"
#include "stq/lattice.hpp"
#include "stq/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace stq {

inline constexpr int kMaxEdSites = 14;

// Basis index of a spin configuration: site 0 is the most significant bit,
// bit value 1 means spin down.
inline std::uint64_t siteMask(int site, int numSites) {
  return std::uint64_t{1} << (numSites - 1 - site);
}

/// TFI Hamiltonian on the full 2^N space. Bonds are enumerated here directly
/// from (x, y) neighbours, independently of LatticeGeometry::bonds().
SpinFlipOperator tfiOperator(const LatticeGeometry& geometry, std::span<const double> fields,
                             double J);

/// Operator of a Pauli sum whose terms are pure X strings or pure Z strings.
SpinFlipOperator pauliSumOperator(const PauliSum& terms, int numSites);

MatR toDenseMatrix(const SpinFlipOperator& op);

struct Spectrum {
  VecR values;               // ascending
  std::vector<VecR> vectors;
  std::vector<double> residuals;
};

/// Lowest k eigenpairs: dense diagonalization up to 10 sites, deflated
/// Lanczos above (N <= 14).
Spectrum denseSpectrum(const SpinFlipOperator& op, int k);
Spectrum denseSpectrum(const LatticeGeometry& geometry, std::span<const double> fields, double J,
                       int k);

// Dense observables of a (normalized) state vector.
template <class T>
double expectationDense(const SpinFlipOperator& op, const Vec<T>& psi);
template <class T>
double xxCorrelationDense(const Vec<T>& psi, int siteA, int siteB, int numSites);
template <class T>
double entanglementEntropyDense(const Vec<T>& psi, int bond, int numSites);

using FieldSchedule = std::function<std::vector<double>(double t)>;

struct KrylovEvolveSettings {
  double dtMicro = 0.0025;
  KrylovExpSettings krylov{};
};

/// Time-ordered evolution from t0 to t1 by micro-steps exp(-i dt H(t_mid))
/// with the fields frozen at each micro-step midpoint.
Vec<cd> krylovEvolve(const Vec<cd>& psi, const LatticeGeometry& geometry,
                     const FieldSchedule& fieldsAt, double J, double t0, double t1,
                     const KrylovEvolveSettings& settings);

/// Exact solution of the open chain H = -J (sum X X + g sum Z) by
/// Jordan-Wigner fermions.
class FreeFermionChain {
 public:
  FreeFermionChain(int length, double g, double J = 1.0);

  double groundEnergy() const { return e0_; }
  double gap() const { return modes_.minCoeff(); }
  double bandwidth() const { return modes_.sum(); }
  // Single-particle energies, ascending.
  const VecR& modeEnergies() const { return modes_; }

  // Ground-state <X_i X_j>.
  double correlationXX(int i, int j) const;

 private:
  int length_;
  VecR modes_;
  MatR gamma_;  // <m_k m_l> = i gamma_kl for k != l; Majoranas ordered a_0, b_0, a_1, b_1, ...
  double e0_ = 0.0;
};

// Pfaffian of a real antisymmetric matrix.
double pfaffian(MatR a);

}  // namespace stq
