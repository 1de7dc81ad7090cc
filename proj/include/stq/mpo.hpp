#pragma once

#include "stq/lattice.hpp"
#include "stq/types.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <vector>

namespace stq {

/// One MPO tensor W^{s s'}_{a b}: for each pair of physical indices a
/// (left-bond x right-bond) matrix.
struct MpoSite {
  std::array<MatR, 4> w;  // w[s * 2 + sp]

  Index leftDim() const { return w[0].rows(); }
  Index rightDim() const { return w[0].cols(); }
  const MatR& block(int s, int sp) const { return w[s * 2 + sp]; }
  MatR& block(int s, int sp) { return w[s * 2 + sp]; }
};

/// Real matrix-product operator on spin-1/2 sites.
///
/// The first tensor has a single left channel and the last a single right
/// channel, so contracting all bonds yields the operator.
class Mpo {
 public:
  Mpo() = default;
  explicit Mpo(std::vector<MpoSite> sites);

  int size() const { return static_cast<int>(sites_.size()); }
  const MpoSite& site(int i) const { return sites_[i]; }
  const std::vector<MpoSite>& sites() const { return sites_; }
  Index maxBondDim() const;

  Mpo scaled(double factor) const;

 private:
  std::vector<MpoSite> sites_;
};

// Exact MPO for a sum of one- and two-site Pauli strings (any range).
//
// Channels at each cut are: idle, finished, and one channel per (site, op)
// that opens a pending two-site term, so the bond dimension is
// 2 + (number of pending left factors crossing the cut).
Mpo buildMpo(const PauliSum& terms, int numSites);

Mpo buildHamiltonianMpo(const LatticeGeometry& geometry, std::span<const double> fields, double J);

Mpo identityMpo(int numSites);

// Full 2^N x 2^N sparse matrix of the MPO; site 0 is the most significant bit.
Eigen::SparseMatrix<double> toSparse(const Mpo& mpo);

}  // namespace stq
