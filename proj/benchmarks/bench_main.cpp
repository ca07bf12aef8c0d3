#include "proxskip/decentralized.hpp"
#include "proxskip/federated.hpp"
#include "proxskip/numerics.hpp"
#include "proxskip/problems.hpp"
#include "proxskip/rng.hpp"
#include "proxskip/solvers.hpp"

#include <benchmark/benchmark.h>

namespace proxskip {
namespace {

void BM_ProxSkipStep(benchmark::State& state) {
  const Index d = state.range(0);
  const Problem f = synthetic::logistic(1000, d, 1e-3, 1);
  const ProxOperator psi = ProxOperator::l1(1e-3);
  const ProxSkipConfig cfg{1.0 / smoothness_constants(f).L, 0.1, 1, 1};
  SolverState s = SolverState::initial(Vec::Zero(d));
  std::uint64_t t = 0;
  for (auto _ : state) {
    s = proxskip_step(s, f, psi, cfg, coin_flip(cfg.seed, t++, cfg.p));
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_ProxSkipStep)->Arg(20)->Arg(100);

void BM_ScaffnewRound(benchmark::State& state) {
  const Index n = state.range(0);
  const Problem p = synthetic::logistic(1000, 20, 1e-3, 2);
  const ClientProblems cp(p, heterogeneous_split(p, n, SplitMode::kShardByLabel));
  const double gamma = 1.0 / smoothness_constants(p).L;
  FederatedState s = FederatedState::initial(n, Vec::Zero(20));
  std::uint64_t t = 0;
  for (auto _ : state) {
    s = scaffnew_round(s, cp, gamma, 0.1, coin_flip(3, t++, 0.1));
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_ScaffnewRound)->Arg(10)->Arg(50);

void BM_DecentralizedRound(benchmark::State& state) {
  const Index n = state.range(0);
  const Problem p = synthetic::heterogeneous_quadratic(n, 10, 100.0, 1.0, 4);
  const ClientProblems cp(p, heterogeneous_split(p, n, SplitMode::kShardByLabel));
  const MixingMatrix m = mixing_matrix(Topology::ring(n));
  const double gamma = 1.0 / smoothness_constants(p).L, prob = 0.2;
  DecentralizedState s = DecentralizedState::initial(n, Vec::Zero(10));
  std::uint64_t t = 0;
  for (auto _ : state) {
    s = decentralized_scaffnew_round(s, cp, m.w, gamma, prob / gamma, prob, coin_flip(5, t++, prob));
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_DecentralizedRound)->Arg(8)->Arg(32);

void BM_SymmetricEigen(benchmark::State& state) {
  const Index n = state.range(0);
  const CounterRng rng(6, streams::kData);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
  }
  const SymMatrix sym(Matrix(a + a.transpose()));
  for (auto _ : state) benchmark::DoNotOptimize(symmetric_eigen(sym).values.data());
}
BENCHMARK(BM_SymmetricEigen)->Arg(16)->Arg(64);

void BM_LogisticGradient(benchmark::State& state) {
  const Problem f = synthetic::logistic(state.range(0), 50, 1e-3, 7);
  const Vec x = Vec::Constant(50, 0.01);
  Vec g(50);
  for (auto _ : state) {
    f.gradient_into(x, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogisticGradient)->Arg(1000)->Arg(10000);

}  // namespace
}  // namespace proxskip

BENCHMARK_MAIN();
