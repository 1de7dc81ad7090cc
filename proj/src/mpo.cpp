#include "stq/mpo.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <map>

namespace stq {

Mpo::Mpo(std::vector<MpoSite> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw InvalidArgument("MPO needs at least one site");
  if (sites_.front().leftDim() != 1 || sites_.back().rightDim() != 1) {
    throw InvalidArgument("MPO boundary bonds must have dimension 1");
  }
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) {
    if (sites_[i].rightDim() != sites_[i + 1].leftDim()) {
      throw InvalidArgument("MPO bond dimension mismatch");
    }
  }
}

Index Mpo::maxBondDim() const {
  Index m = 1;
  for (const auto& s : sites_) m = std::max(m, s.rightDim());
  return m;
}

Mpo Mpo::scaled(double factor) const {
  std::vector<MpoSite> out = sites_;
  // Scaling the first tensor scales the whole operator.
  for (auto& block : out.front().w) block *= factor;
  return Mpo(std::move(out));
}

namespace {

struct Channel {
  int site;
  Pauli op;
  bool operator<(const Channel& o) const {
    return site != o.site ? site < o.site : static_cast<int>(op) < static_cast<int>(o.op);
  }
};

struct TwoBody {
  Channel first;
  int secondSite;
  Pauli secondOp;
  double coef;
};

void addOp(MpoSite& w, Index a, Index b, const Op2<double>& op, double coef) {
  for (int s = 0; s < 2; ++s) {
    for (int sp = 0; sp < 2; ++sp) w.block(s, sp)(a, b) += coef * op(s, sp);
  }
}

}  // namespace

Mpo buildMpo(const PauliSum& terms, int numSites) {
  if (numSites < 1) throw InvalidArgument("MPO needs at least one site");

  std::vector<Op2<double>> onsite(numSites, Op2<double>::Zero());
  std::vector<TwoBody> pairs;
  for (const auto& term : terms) {
    if (!std::isfinite(term.coef)) throw InvalidArgument("non-finite coefficient");
    if (term.factors.empty()) throw InvalidArgument("constant terms are not supported");
    for (const auto& f : term.factors) {
      if (f.site < 0 || f.site >= numSites) throw InvalidArgument("term site out of range");
    }
    if (term.factors.size() == 1) {
      onsite[term.factors[0].site] += term.coef * pauliMatrix<double>(term.factors[0].op);
    } else if (term.factors.size() == 2) {
      auto [f1, f2] = std::pair{term.factors[0], term.factors[1]};
      if (f1.site == f2.site) throw InvalidArgument("repeated site in a term");
      if (f1.site > f2.site) std::swap(f1, f2);
      pairs.push_back({{f1.site, f1.op}, f2.site, f2.op, term.coef});
    } else {
      throw InvalidArgument("only one- and two-site terms are supported");
    }
  }

  // Channels open across cut k (between site k-1 and k): first.site < k <= secondSite.
  std::vector<std::vector<Channel>> open(numSites + 1);
  std::map<Channel, int> lastUse;
  for (const auto& p : pairs) {
    auto it = lastUse.find(p.first);
    if (it == lastUse.end() || it->second < p.secondSite) lastUse[p.first] = p.secondSite;
  }
  for (const auto& [channel, last] : lastUse) {
    for (int k = channel.site + 1; k <= last; ++k) open[k].push_back(channel);
  }

  // Index layout at cut k: 0 = idle, 1..n = channels, n+1 = finished.
  auto dimAt = [&](int k) -> Index {
    if (k == 0 || k == numSites) return 1;
    return static_cast<Index>(open[k].size()) + 2;
  };
  auto idle = [&](int k) -> Index { return k == numSites ? -1 : 0; };
  auto finished = [&](int k) -> Index {
    if (k == 0) return -1;
    if (k == numSites) return 0;
    return static_cast<Index>(open[k].size()) + 1;
  };
  auto channelIndex = [&](int k, const Channel& c) -> Index {
    const auto& list = open[k];
    auto it = std::find_if(list.begin(), list.end(),
                           [&](const Channel& o) { return o.site == c.site && o.op == c.op; });
    return it == list.end() ? -1 : 1 + static_cast<Index>(it - list.begin());
  };

  std::vector<MpoSite> sites(numSites);
  const Op2<double> eye = identity2<double>();
  for (int k = 0; k < numSites; ++k) {
    Index dl = dimAt(k);
    Index dr = dimAt(k + 1);
    MpoSite& w = sites[k];
    for (auto& block : w.w) block = MatR::Zero(dl, dr);

    if (idle(k) >= 0 && idle(k + 1) >= 0) addOp(w, idle(k), idle(k + 1), eye, 1.0);
    if (finished(k) >= 0 && finished(k + 1) >= 0) addOp(w, finished(k), finished(k + 1), eye, 1.0);
    if (idle(k) >= 0 && finished(k + 1) >= 0) addOp(w, idle(k), finished(k + 1), onsite[k], 1.0);

    // Channels opened at this site.
    for (const auto& c : open[k + 1]) {
      if (c.site == k) addOp(w, idle(k), channelIndex(k + 1, c), pauliMatrix<double>(c.op), 1.0);
    }
    // Channels passing through.
    for (const auto& c : open[k]) {
      Index next = channelIndex(k + 1, c);
      if (next >= 0) addOp(w, channelIndex(k, c), next, eye, 1.0);
    }
    // Channels closing at this site.
    for (const auto& p : pairs) {
      if (p.secondSite != k) continue;
      addOp(w, channelIndex(k, p.first), finished(k + 1), pauliMatrix<double>(p.secondOp), p.coef);
    }
  }
  return Mpo(std::move(sites));
}

Mpo buildHamiltonianMpo(const LatticeGeometry& geometry, std::span<const double> fields, double J) {
  return buildMpo(hamiltonianTerms(geometry, fields, J), geometry.size());
}

Mpo identityMpo(int numSites) {
  std::vector<MpoSite> sites(numSites);
  for (auto& w : sites) {
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp) w.block(s, sp) = MatR::Constant(1, 1, s == sp ? 1.0 : 0.0);
  }
  return Mpo(std::move(sites));
}

Eigen::SparseMatrix<double> toSparse(const Mpo& mpo) {
  using Sparse = Eigen::SparseMatrix<double>;
  if (mpo.size() > 16) throw InvalidArgument("sparse reconstruction limited to 16 sites");
  // partial[b] is the operator on sites 0..k-1 ending in right channel b.
  std::vector<Sparse> partial(1);
  partial[0].resize(1, 1);
  partial[0].insert(0, 0) = 1.0;
  for (int k = 0; k < mpo.size(); ++k) {
    const MpoSite& w = mpo.site(k);
    std::vector<Sparse> next(w.rightDim());
    Index dim = partial[0].rows() * 2;
    for (auto& n : next) n.resize(dim, dim);
    for (Index a = 0; a < w.leftDim(); ++a) {
      for (Index b = 0; b < w.rightDim(); ++b) {
        Sparse local(2, 2);
        bool any = false;
        for (int s = 0; s < 2; ++s)
          for (int sp = 0; sp < 2; ++sp) {
            double v = w.block(s, sp)(a, b);
            if (v != 0.0) {
              local.insert(s, sp) = v;
              any = true;
            }
          }
        if (!any || partial[a].nonZeros() == 0) continue;
        Sparse kron = Eigen::kroneckerProduct(partial[a], local);
        next[b] += kron;
      }
    }
    partial = std::move(next);
  }
  partial[0].makeCompressed();
  return partial[0];
}

}  // namespace stq
