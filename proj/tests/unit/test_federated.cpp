#include "proxskip/errors.hpp"
#include "proxskip/federated.hpp"
#include "proxskip/rng.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace proxskip {
namespace {

using testing::normal_vec;

ClientProblems split_clients(const Problem& p, Index n, SplitMode mode = SplitMode::kShardByLabel) {
  return ClientProblems(p, heterogeneous_split(p, n, mode));
}

// n identical quadratic samples, one per client.
Problem homogeneous_quadratic(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Matrix m(d, d);
  for (Index i = 0; i < d; ++i) m.col(i) = normal_vec(d, gen);
  const SymMatrix a(m.transpose() * m / static_cast<double>(d) + Matrix::Identity(d, d));
  const Vec b = normal_vec(d, gen);
  return Problem::quadratic(std::vector<QuadraticTerm>(static_cast<std::size_t>(n), {a, b}));
}

TEST(CoinSchedule, Examples) {
  const CoinSchedule ones = make_coin_schedule(1.0, 50, 3);
  EXPECT_EQ(ones.ones(), 50);
  const CoinSchedule half = make_coin_schedule(0.5, 100000, 4);
  EXPECT_NEAR(static_cast<double>(half.ones()) / 1e5, 0.5, 0.01);
  EXPECT_EQ(half.theta, make_coin_schedule(0.5, 100000, 4).theta);
  for (std::uint64_t t = 0; t < 1000; ++t) EXPECT_EQ(half.theta[t] != 0, coin_flip(4, t, 0.5));
  EXPECT_THROW(make_coin_schedule(0.0, 10, 1), ArgumentError);
}

TEST(ScaffnewRound, SkipKeepsControlVariates) {
  const Problem p = synthetic::heterogeneous_quadratic(4, 3, 10.0, 1.0, 1);
  const ClientProblems cp = split_clients(p, 4);
  std::mt19937_64 gen(1);
  FederatedState s = FederatedState::initial(4, normal_vec(3, gen));
  s = scaffnew_round(s, cp, 0.1, 0.5, true);
  const FederatedState next = scaffnew_round(s, cp, 0.1, 0.5, false);
  EXPECT_EQ(next.h, s.h);
  EXPECT_EQ(next.comm_rounds, s.comm_rounds);
  EXPECT_EQ(next.local_grad_steps, s.local_grad_steps + 4);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_EQ(Vec(next.client_x(i)),
              Vec(s.client_x(i) - 0.1 * (cp.client(i).gradient(s.client_x(i)) - s.client_h(i))));
  }
}

TEST(ScaffnewRound, CommunicationFormula) {
  const Problem p = synthetic::heterogeneous_quadratic(3, 4, 10.0, 1.0, 2);
  const ClientProblems cp = split_clients(p, 3);
  std::mt19937_64 gen(2);
  FederatedState s = FederatedState::initial(3, normal_vec(4, gen));
  const double gamma = 0.2, prob = 0.25;
  for (int k = 0; k < 3; ++k) s = scaffnew_round(s, cp, gamma, prob, k % 2 == 0);
  const FederatedState next = scaffnew_round(s, cp, gamma, prob, true);
  Vec mean = Vec::Zero(4);
  std::vector<Vec> xhat;
  for (Index i = 0; i < 3; ++i) {
    xhat.push_back(s.client_x(i) - gamma * (cp.client(i).gradient(s.client_x(i)) - s.client_h(i)));
    mean += xhat.back() / 3.0;
  }
  EXPECT_EQ(next.comm_rounds, s.comm_rounds + 1);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_LE((next.client_x(i) - mean).norm(), 1e-13);
    EXPECT_LE((next.client_h(i) - (s.client_h(i) + (prob / gamma) * (mean - xhat[i]))).norm(), 1e-11);
    EXPECT_EQ(Vec(next.client_x(i)), Vec(next.client_x(0)));
  }
}

TEST(ScaffnewRound, SingleClientIsProxSkipWithConsensus) {
  const Problem p = synthetic::logistic(30, 4, 0.05, 3);
  const ClientProblems cp = split_clients(p, 1);
  std::mt19937_64 gen(3);
  const Vec x0 = normal_vec(4, gen);
  FederatedState fs = FederatedState::initial(1, x0);
  SolverState ps = SolverState::initial(x0);
  const ProxSkipConfig cfg{0.5, 0.3, 1, 0};
  for (std::uint64_t t = 0; t < 100; ++t) {
    const bool theta = coin_flip(5, t, cfg.p);
    fs = scaffnew_round(fs, cp, cfg.gamma, cfg.p, theta);
    ps = proxskip_step(ps, p, ProxOperator::consensus(1, 4), cfg, theta);
    ASSERT_EQ(fs.x, ps.x);
    ASSERT_EQ(fs.h, ps.h);
  }
}

TEST(ScaffnewRound, IdenticalClientsStayIdentical) {
  const Problem p = homogeneous_quadratic(4, 3, 4);
  const ClientProblems cp = split_clients(p, 4, SplitMode::kRoundRobin);
  FederatedState s = FederatedState::initial(4, Vec::Ones(3));
  s = scaffnew_round(s, cp, 0.1, 0.5, true);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_EQ(Vec(s.client_x(i)), Vec(s.client_x(0)));
    EXPECT_LE(s.client_h(i).norm(), 1e-15);
  }
}

TEST(RunScaffnew, MatchesStackedProxSkipBitwise) {
  const Problem p = synthetic::logistic(60, 5, 0.01, 5);
  const ClientProblems cp = split_clients(p, 5);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  const ProxSkipConfig cfg{1.0 / smoothness_constants(p).L, 0.2, 500, 8};
  const RunRecord a = run_scaffnew(cp, cfg, StochasticOracle::exact(), probe);
  const RunRecord b = run_stacked_proxskip(cp, cfg, probe);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].dist_sq, b.rows[k].dist_sq);
    EXPECT_EQ(a.rows[k].dispersion, b.rows[k].dispersion);
    EXPECT_EQ(a.rows[k].lyapunov, b.rows[k].lyapunov);
    EXPECT_EQ(a.rows[k].comm_rounds, b.rows[k].comm_rounds);
  }
}

TEST(RunScaffnew, ControlVariatesSumToZeroAndConsensusAfterCommunication) {
  const Problem p = synthetic::heterogeneous_quadratic(6, 4, 100.0, 2.0, 6);
  const ClientProblems cp = split_clients(p, 6);
  const double gamma = 1.0 / smoothness_constants(p).L, prob = 0.1;
  FederatedState s = FederatedState::initial(6, Vec::Zero(4));
  std::int64_t ones = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    const bool theta = coin_flip(2, t, prob);
    ones += theta;
    s = scaffnew_round(s, cp, gamma, prob, theta);
    Vec sum = Vec::Zero(4);
    for (Index i = 0; i < 6; ++i) sum += s.client_h(i);
    ASSERT_LE(sum.cwiseAbs().maxCoeff(), 1e-9 * 6);
    if (theta) {
      for (Index i = 1; i < 6; ++i) ASSERT_EQ(Vec(s.client_x(i)), Vec(s.client_x(0)));
    }
  }
  EXPECT_EQ(s.comm_rounds, ones);
}

TEST(RunScaffnew, HomogeneousClientsFollowGradientDescent) {
  const Problem p = homogeneous_quadratic(3, 4, 7);
  const ClientProblems cp = split_clients(p, 3, SplitMode::kRoundRobin);
  const double gamma = 1.0 / smoothness_constants(p).L;
  FederatedState s = FederatedState::initial(3, Vec::Ones(4));
  Vec x = Vec::Ones(4);
  for (std::uint64_t t = 0; t < 200; ++t) {
    s = scaffnew_round(s, cp, gamma, 0.2, coin_flip(1, t, 0.2));
    x = x - gamma * p.gradient(x);
    for (Index i = 0; i < 3; ++i) ASSERT_LE((s.client_x(i) - x).norm(), 1e-12);
  }
}

TEST(RunScaffnew, CommunicationCountAtHighConditioning) {
  const Problem p = synthetic::heterogeneous_quadratic(10, 10, 1e4, 1.0, 7);
  const ClientProblems cp = split_clients(p, 10);
  const SmoothnessInfo info = smoothness_constants(p);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  RunOptions opts;
  opts.stop_lyapunov_ratio = 1e-6;
  opts.log_every = 1 << 30;
  const RunRecord r = run_scaffnew(
      cp, ProxSkipConfig{1.0 / info.L, optimal_probability(info), 10000000, 1},
      StochasticOracle::exact(), probe, opts);
  ASSERT_LE(r.last().lyapunov, 1e-6 * r.rows.front().lyapunov);
  const double predicted = std::sqrt(info.kappa()) * std::log(1e6);
  EXPECT_LE(static_cast<double>(r.last().comm_rounds), 3.0 * predicted);
  EXPECT_GE(static_cast<double>(r.last().comm_rounds), predicted / 3.0);
}

TEST(RunScaffnew, ControlVariatesReachClientGradients) {
  const Problem p = synthetic::heterogeneous_quadratic(4, 5, 50.0, 1.0, 8);
  const ClientProblems cp = split_clients(p, 4);
  const SmoothnessInfo info = smoothness_constants(p);
  const Vec xs = reference_minimizer(p, ProxOperator::none());
  const double gamma = 1.0 / info.L, prob = optimal_probability(info);
  FederatedState s = FederatedState::initial(4, Vec::Zero(5));
  for (std::uint64_t t = 0; t < 40000; ++t) s = scaffnew_round(s, cp, gamma, prob, coin_flip(3, t, prob));
  for (Index i = 0; i < 4; ++i) {
    EXPECT_GT(cp.client(i).gradient(xs).norm(), 1e-3);
    EXPECT_LE((s.client_h(i) - cp.client(i).gradient(xs)).norm(), 1e-6);
  }
}

TEST(LocalGd, SingleLocalStepIsDistributedGradientDescent) {
  const Problem p = synthetic::heterogeneous_quadratic(4, 3, 20.0, 1.0, 9);
  const ClientProblems cp = split_clients(p, 4);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  const double gamma = 0.5 / smoothness_constants(p).L;
  const RunRecord a = run_local_gd(cp, gamma, 1, 100, StochasticOracle::exact(), 0, probe);
  const RunRecord b = run_gd_baseline(p, gamma, 100, probe);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_NEAR(a.rows[k].dist_sq, b.rows[k].dist_sq, 1e-12 * (1.0 + b.rows[k].dist_sq));
  }
}

TEST(LocalGd, HomogeneousClientsMatchGradientDescent) {
  const Problem p = homogeneous_quadratic(3, 4, 10);
  const ClientProblems cp = split_clients(p, 3, SplitMode::kRoundRobin);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  const double gamma = 0.5 / smoothness_constants(p).L;
  RunOptions opts;
  opts.log_every = 1;
  const RunRecord a = run_local_gd(cp, gamma, 5, 20, StochasticOracle::exact(), 0, probe, opts);
  const RunRecord b = run_gd_baseline(p, gamma, 100, probe, opts);
  for (const RunRow& row : a.rows) {
    const RunRow& ref = b.rows[static_cast<std::size_t>(row.comm_rounds * 5)];
    EXPECT_NEAR(row.dist_sq, ref.dist_sq, 1e-12 * (1.0 + ref.dist_sq));
  }
}

TEST(LocalGd, HeterogeneityCausesPlateauWhileScaffnewConverges) {
  const Problem p = synthetic::heterogeneous_quadratic(5, 5, 100.0, 1.0, 11);
  const ClientProblems cp = split_clients(p, 5);
  const SmoothnessInfo info = smoothness_constants(p);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  const double gamma = 1.0 / info.L;
  const RunRecord local = run_local_gd(cp, gamma, 10, 3000, StochasticOracle::exact(), 0, probe);
  const RunRecord scaff = run_scaffnew(cp, ProxSkipConfig{gamma, 0.1, 30000, 1},
                                       StochasticOracle::exact(), probe);
  const double d0 = local.rows.front().dist_sq;
  EXPECT_GT(local.last().dist_sq, 1e-6 * d0);
  EXPECT_LT(scaff.last().dist_sq, 1e-3 * local.last().dist_sq);
  EXPECT_THROW(run_local_gd(cp, gamma, 0, 10), ArgumentError);
}

TEST(Scaffold, SingleClientIsGradientDescent) {
  const Problem p = synthetic::logistic(30, 4, 0.05, 12);
  const ClientProblems cp = split_clients(p, 1);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  const double gamma = 1.0 / smoothness_constants(p).L;
  RunOptions opts;
  opts.log_every = 1;
  const RunRecord a = run_scaffold(cp, gamma, 4, 25, StochasticOracle::exact(), 0, probe, opts);
  const RunRecord b = run_gd_baseline(p, gamma, 100, probe, opts);
  for (const RunRow& row : a.rows) {
    const RunRow& ref = b.rows[static_cast<std::size_t>(row.comm_rounds * 4)];
    EXPECT_NEAR(row.dist_sq, ref.dist_sq, 1e-12 * (1.0 + ref.dist_sq));
  }
}

TEST(Scaffold, ConvergesLinearlyOnHeterogeneousQuadratics) {
  const Problem p = synthetic::heterogeneous_quadratic(5, 5, 100.0, 1.0, 11);
  const ClientProblems cp = split_clients(p, 5);
  const SmoothnessInfo info = smoothness_constants(p);
  const FederatedProbe probe{reference_minimizer(p, ProxOperator::none())};
  const std::int64_t tau = 10;
  const RunRecord r = run_scaffold(cp, theoretical::local_stepsize(info.L, tau), tau, 20000,
                                   StochasticOracle::exact(), 0, probe);
  EXPECT_LE(r.last().dist_sq, 1e-8 * r.rows.front().dist_sq);
}

TEST(GdBaseline, Examples) {
  const Vec a = Vec::LinSpaced(3, -1.0, 1.0);
  const Problem half = Problem::quadratic(SymMatrix::identity(3), a);
  const RunRecord one = run_gd_baseline(half, 1.0, 1, FederatedProbe{a});
  EXPECT_EQ(one.last().dist_sq, 0.0);

  const Problem p = synthetic::heterogeneous_quadratic(1, 6, 100.0, 1.0, 13);
  const SmoothnessInfo info = smoothness_constants(p);
  RunOptions opts;
  opts.log_every = 1;
  const auto T = static_cast<std::int64_t>(std::ceil(info.kappa() / 2.0 * std::log(1e6)) * 2.0);
  const RunRecord r = run_gd_baseline(p, 1.0 / info.L, T,
                                      FederatedProbe{reference_minimizer(p, ProxOperator::none())}, opts);
  for (std::size_t k = 1; k < r.rows.size(); ++k) EXPECT_LE(r.rows[k].dist_sq, r.rows[k - 1].dist_sq);
  EXPECT_LE(r.last().dist_sq, 1e-6 * r.rows.front().dist_sq);
  EXPECT_EQ(r.last().comm_rounds, T);
}

TEST(TheoreticalStepsizes, Values) {
  EXPECT_DOUBLE_EQ(theoretical::gd_stepsize(4.0), 0.25);
  EXPECT_DOUBLE_EQ(theoretical::scaffnew_stepsize(4.0), 0.25);
  EXPECT_DOUBLE_EQ(theoretical::local_stepsize(4.0, 5), 0.05);
}

}  // namespace
}  // namespace proxskip
