// Parallel kernels against their serial references. Args: bond dimension,
// threads (ignored by the reference runs).

#include "stq/ed.hpp"
#include "stq/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace stq;

namespace {

Mat<cd> randomMatrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Mat<cd> m(r, c);
  for (Index i = 0; i < m.size(); ++i) {
    double re = gauss(rng);
    double im = gauss(rng);
    m.data()[i] = cd(re, im);
  }
  return m;
}

Env<cd> randomEnv(Index channels, Index dim, std::mt19937_64& rng) {
  Env<cd> env;
  for (Index a = 0; a < channels; ++a) env.push_back(randomMatrix(dim, dim, rng));
  return env;
}

// A bulk site of the Ly = 4 cylinder MPO.
struct SweepFixture {
  Mpo mpo;
  LocalTensor<cd> a;
  Env<cd> left;
  Env<cd> right;
  EffectiveMpo two;
  Env<cd> left2;
  Env<cd> right2;
  Vec<cd> theta;

  explicit SweepFixture(Index chi)
      : mpo(buildHamiltonianMpo(LatticeGeometry(6, 4), std::vector<double>(24, 3.0), 1.0)),
        a(2, chi, chi),
        two(EffectiveMpo::twoSite(mpo.site(9), mpo.site(10))) {
    std::mt19937_64 rng(5);
    const MpoSite& w = mpo.site(9);
    a.data() = randomMatrix(a.data().size(), 1, rng);
    left = randomEnv(w.leftDim(), chi, rng);
    right = randomEnv(w.rightDim(), chi, rng);
    left2 = randomEnv(two.leftDim(), chi, rng);
    right2 = randomEnv(two.rightDim(), chi, rng);
    theta = randomMatrix(4 * chi * chi, 1, rng);
  }
};

void BM_ExtendLeft(benchmark::State& state) {
  SweepFixture f(state.range(0));
  setKernelThreads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::extendLeft(f.left, f.a, f.mpo.site(9)));
}

void BM_ExtendLeftReference(benchmark::State& state) {
  SweepFixture f(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::reference::extendLeft(f.left, f.a, f.mpo.site(9)));
}

void BM_ApplyTwoSite(benchmark::State& state) {
  const Index chi = state.range(0);
  SweepFixture f(chi);
  setKernelThreads(static_cast<int>(state.range(1)));
  Vec<cd> out(f.theta.size());
  for (auto _ : state) {
    kernels::applyEffective(f.left2, f.two, f.right2, chi, chi, f.theta.data(), out.data());
    benchmark::ClobberMemory();
  }
}

void BM_ApplyTwoSiteReference(benchmark::State& state) {
  const Index chi = state.range(0);
  SweepFixture f(chi);
  Vec<cd> out(f.theta.size());
  for (auto _ : state) {
    kernels::reference::applyEffective(f.left2, f.two, f.right2, chi, chi, f.theta.data(),
                                       out.data());
    benchmark::ClobberMemory();
  }
}

// Dense oracle Hamiltonian, 3 x 4 cylinder.
void BM_SpinFlip(benchmark::State& state) {
  LatticeGeometry g(4, 3);
  SpinFlipOperator op = tfiOperator(g, std::vector<double>(g.size(), 3.0), 1.0);
  setKernelThreads(static_cast<int>(state.range(0)));
  Vec<cd> in = Vec<cd>::Ones(op.diagonal.size());
  Vec<cd> out(in.size());
  for (auto _ : state) {
    kernels::applySpinFlip(op, in.data(), out.data());
    benchmark::ClobberMemory();
  }
}

void BM_SpinFlipReference(benchmark::State& state) {
  LatticeGeometry g(4, 3);
  SpinFlipOperator op = tfiOperator(g, std::vector<double>(g.size(), 3.0), 1.0);
  Vec<cd> in = Vec<cd>::Ones(op.diagonal.size());
  Vec<cd> out(in.size());
  for (auto _ : state) {
    kernels::reference::applySpinFlip(op, in.data(), out.data());
    benchmark::ClobberMemory();
  }
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long chi : {32, 64, 128})
    for (long threads : {1, 2, 4}) b->Args({chi, threads});
}

}  // namespace

BENCHMARK(BM_ExtendLeft)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtendLeftReference)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyTwoSite)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyTwoSiteReference)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpinFlip)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpinFlipReference)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
