#include "proxskip/decentralized.hpp"
#include "proxskip/errors.hpp"
#include "proxskip/federated.hpp"
#include "proxskip/rng.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace proxskip {
namespace {

using testing::normal_vec;

ClientProblems quadratic_clients(Index n, Index d, double kappa, std::uint64_t seed) {
  const Problem p = synthetic::heterogeneous_quadratic(n, d, kappa, 1.0, seed);
  return ClientProblems(p, heterogeneous_split(p, n, SplitMode::kShardByLabel));
}

TEST(MixingMatrix, CompleteTwo) {
  const MixingMatrix m = mixing_matrix(Topology::complete(2));
  EXPECT_DOUBLE_EQ(m.w(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(m.w(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(m.w(1, 1), 0.75);
  EXPECT_NEAR(m.delta, 0.5, 1e-14);
}

TEST(MixingMatrix, StructuralInvariants) {
  for (const Topology& top : {Topology::ring(7), Topology::complete(5), Topology::star(6),
                              Topology::grid(3, 4), Topology::custom(4, {{0, 1}, {1, 2}, {1, 3}})}) {
    const MixingMatrix m = mixing_matrix(top);
    const Index n = top.nodes();
    const Matrix& w = m.w.matrix();
    EXPECT_LE((w.rowwise().sum() - Vec::Ones(n)).cwiseAbs().maxCoeff(), 1e-12) << top.name();
    EXPECT_LE((w.colwise().sum().transpose() - Vec::Ones(n)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(m.eigenvalues[0], 1.0, 1e-12);
    EXPECT_GE(m.eigenvalues[n - 1], -1e-10);
    EXPECT_LE((w * Vec::Ones(n) - Vec::Ones(n)).norm(), 1e-12);
    EXPECT_NEAR(m.delta, 1.0 - m.eigenvalues[1], 1e-15);
    EXPECT_GT(m.delta, 0.0);
    EXPECT_LE(m.delta, 1.0);
    Matrix adj = Matrix::Identity(n, n);
    for (auto [i, j] : top.edges()) adj(i, j) = adj(j, i) = 1.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) EXPECT_EQ(w(i, j) != 0.0, adj(i, j) != 0.0);
    }
    const Matrix sq = m.sqrt_laplacian.matrix() * m.sqrt_laplacian.matrix();
    EXPECT_LE((sq - (Matrix::Identity(n, n) - w)).norm(), 1e-10);
  }
}

TEST(MixingMatrix, RelabelingKeepsSpectralGap) {
  const double a = mixing_matrix(Topology::custom(4, {{0, 1}, {1, 2}, {2, 3}})).delta;
  const double b = mixing_matrix(Topology::custom(4, {{2, 0}, {0, 3}, {3, 1}})).delta;
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(MixingMatrix, RingGapShrinksWithSize) {
  EXPECT_GT(mixing_matrix(Topology::ring(4)).delta, mixing_matrix(Topology::ring(8)).delta);
  EXPECT_GT(mixing_matrix(Topology::ring(8)).delta, mixing_matrix(Topology::ring(16)).delta);
}

TEST(MixingMatrix, Errors) {
  EXPECT_THROW(mixing_matrix(Topology::custom(4, {{0, 1}, {2, 3}})), ArgumentError);
  EXPECT_THROW(Topology::ring(1), ArgumentError);
  EXPECT_THROW(Topology::custom(3, {{0, 3}}), ArgumentError);
  EXPECT_THROW(mixing_matrix_from(SymMatrix::identity(3)), ArgumentError);
  Matrix neg(2, 2);
  neg << 0.0, 1.0, 1.0, 0.0;
  EXPECT_THROW(mixing_matrix_from(SymMatrix(neg)), ArgumentError);
}

TEST(DecentralizedRound, SkipIsLocalStep) {
  const ClientProblems cp = quadratic_clients(4, 3, 10.0, 1);
  const MixingMatrix m = mixing_matrix(Topology::ring(4));
  std::mt19937_64 gen(1);
  DecentralizedState s = DecentralizedState::initial(4, normal_vec(3, gen));
  s = decentralized_scaffnew_round(s, cp, m.w, 0.1, 2.0, 0.5, true);
  const DecentralizedState next = decentralized_scaffnew_round(s, cp, m.w, 0.1, 2.0, 0.5, false);
  EXPECT_EQ(next.h, s.h);
  EXPECT_EQ(next.comm_rounds, s.comm_rounds);
  for (Index i = 0; i < 4; ++i) {
    const Vec xi = s.x.segment(i * 3, 3);
    const Vec expect = xi - 0.1 * (cp.client(i).gradient(xi) - Vec(s.h.segment(i * 3, 3)));
    EXPECT_EQ(Vec(next.x.segment(i * 3, 3)), expect);
  }
}

TEST(DecentralizedRound, CommunicationPreservesAverage) {
  const ClientProblems cp = quadratic_clients(5, 3, 10.0, 2);
  const MixingMatrix m = mixing_matrix(Topology::ring(5));
  std::mt19937_64 gen(2);
  DecentralizedState s = DecentralizedState::initial(5, Vec::Zero(3));
  s.x = normal_vec(15, gen);
  for (double ratio : {1.0, 0.5, 0.1}) {
    const double gamma = 0.1, p = 0.4, tau = ratio * p / gamma;
    DecentralizedState skip = decentralized_scaffnew_round(s, cp, m.w, gamma, tau, p, false);
    DecentralizedState comm = decentralized_scaffnew_round(s, cp, m.w, gamma, tau, p, true);
    EXPECT_LE((comm.mean_x() - skip.mean_x()).norm(), 1e-14);
    EXPECT_EQ(comm.comm_rounds, s.comm_rounds + 1);
  }
  EXPECT_THROW(decentralized_scaffnew_round(s, cp, m.w, 0.1, 5.0, 0.4, true), ArgumentError);
}

TEST(DecentralizedRound, ConsensusIsFixedByMixing) {
  // Identical clients at consensus keep identical local steps, so mixing is a no-op.
  const Problem one = synthetic::heterogeneous_quadratic(1, 3, 10.0, 1.0, 3);
  const QuadraticTerm term = one.terms().front();
  const Problem p = Problem::quadratic(std::vector<QuadraticTerm>(3, term));
  const ClientProblems cp(p, heterogeneous_split(p, 3, SplitMode::kRoundRobin));
  const MixingMatrix m = mixing_matrix(Topology::ring(3));
  const DecentralizedState s = DecentralizedState::initial(3, Vec::Ones(3));
  const DecentralizedState a = decentralized_scaffnew_round(s, cp, m.w, 0.2, 1.0, 0.2, true);
  const DecentralizedState b = decentralized_scaffnew_round(s, cp, m.w, 0.2, 1.0, 0.2, false);
  EXPECT_LE((a.x - b.x).norm(), 1e-15);
  EXPECT_LE(a.h.norm(), 1e-13);
}

TEST(DecentralizedRound, ExactAveragingMatchesScaffnew) {
  const Index n = 4, d = 3;
  const ClientProblems cp = quadratic_clients(n, d, 20.0, 4);
  const MixingMatrix avg = mixing_matrix_from(SymMatrix(Matrix::Constant(n, n, 1.0 / n)));
  const double gamma = 0.3, p = 0.25;
  std::mt19937_64 gen(4);
  const Vec x0 = normal_vec(d, gen);
  DecentralizedState ds = DecentralizedState::initial(n, x0);
  FederatedState fs = FederatedState::initial(n, x0);
  for (std::uint64_t t = 0; t < 300; ++t) {
    const bool theta = coin_flip(6, t, p);
    ds = decentralized_scaffnew_round(ds, cp, avg.w, gamma, p / gamma, p, theta);
    fs = scaffnew_round(fs, cp, gamma, p, theta);
    ASSERT_LE((ds.x - fs.x).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SplitSkip, IndicatorZeroDualStep) {
  std::mt19937_64 gen(5);
  const ClientProblems cp = quadratic_clients(3, 2, 10.0, 5);
  const StackedConsensusObjective f(cp);
  const MixingMatrix m = mixing_matrix(Topology::ring(3));
  const BlockOperator lmat(m.sqrt_laplacian, 2);
  const ProxOperator psi = ProxOperator::indicator_zero();
  DualState s = DualState::initial(normal_vec(6, gen), 6);
  s.y = normal_vec(6, gen);
  const double gamma = 0.2, tau = 1.5, p = 0.5;
  Vec lty(6), grad(6), lx(6), diff(6);
  lmat.apply_transpose(s.y, lty);
  f.gradient_into(s.x, grad);
  const Vec xhat = s.x - gamma * (grad + lty);
  lmat.apply(xhat, lx);
  const Vec y = s.y + tau * lx;
  lmat.apply_transpose(Vec(y - s.y), diff);
  const DualState comm = splitskip_step(s, f, lmat, psi, gamma, tau, p, true);
  EXPECT_LE((comm.y - y).norm(), 1e-13);
  EXPECT_LE((comm.x - (xhat - (gamma / p) * diff)).norm(), 1e-13);
  const DualState skip = splitskip_step(s, f, lmat, psi, gamma, tau, p, false);
  EXPECT_EQ(skip.y, s.y);
  EXPECT_EQ(skip.x, xhat);
}

TEST(SplitSkip, ProbabilityOneIsPrimalDualIteration) {
  // Hand-written PAPC step for min f(x) + psi(Kx): y+ = prox_{tau psi*}(y + tau K(x - gamma(grad + K^T y))),
  // x+ = x - gamma(grad + K^T y+).
  std::mt19937_64 gen(6);
  const Index m = 3, n = 4;
  Matrix k(m, n);
  for (Index j = 0; j < n; ++j) k.col(j) = normal_vec(m, gen);
  const Problem f = synthetic::logistic(20, n, 0.1, 6);
  const DenseOperator op(k);
  const ProxOperator psi = ProxOperator::l1(0.3);
  DualState s = DualState::initial(normal_vec(n, gen), m);
  s.y = normal_vec(m, gen, 0.1);
  const double gamma = 0.3, tau = 0.7;
  const Vec g = f.gradient(s.x);
  const Vec y = prox_conjugate(psi, tau, s.y + tau * k * (s.x - gamma * (g + k.transpose() * s.y)));
  const Vec x = s.x - gamma * (g + k.transpose() * y);
  const DualState next = splitskip_step(s, f, op, psi, gamma, tau, 1.0, true);
  EXPECT_LE((next.y - y).norm(), 1e-12);
  EXPECT_LE((next.x - x).norm(), 1e-12);
}

TEST(Equivalence, LockstepDeviation) {
  struct Case {
    Topology top;
    double p;
    std::uint64_t seed;
  };
  const std::vector<Case> cases = {{Topology::ring(5), 0.3, 1},   {Topology::ring(5), 1.0, 2},
                                   {Topology::complete(2), 0.4, 3}, {Topology::star(6), 0.2, 4},
                                   {Topology::grid(2, 3), 0.5, 5}};
  for (const Case& c : cases) {
    const Index n = c.top.nodes();
    const ClientProblems cp = quadratic_clients(n, 3, 30.0, c.seed);
    const double gamma = 1.0 / smoothness_constants(cp.global()).L;
    std::mt19937_64 gen(c.seed);
    const Vec x0 = normal_vec(3, gen);
    EXPECT_LE(equivalence_check(c.top, cp, EquivalenceConfig{gamma, 0.0, c.p, 200, c.seed}, &x0), 1e-9)
        << c.top.name();
  }
}

TEST(DecentralizedLyapunov, InitialValueAndBound) {
  const Index n = 5, d = 3;
  const ClientProblems cp = quadratic_clients(n, d, 20.0, 7);
  const MixingMatrix m = mixing_matrix(Topology::ring(n));
  const Vec xs = reference_minimizer(cp.global(), ProxOperator::none());
  const double gamma = 1.0 / smoothness_constants(cp.global()).L, p = 0.3, tau = p / gamma;
  const Vec ys = reference_dual_solution(cp, m, xs, gamma, tau);
  const Vec xs_stacked = xs.replicate(n, 1);
  const Vec x0 = Vec::Zero(d);
  const DualState s0 = DualState::initial(x0.replicate(n, 1), n * d);
  const double phi0 = decentralized_lyapunov(s0, xs_stacked, ys, gamma, p, tau);
  EXPECT_NEAR(phi0, (x0.replicate(n, 1) - xs_stacked).squaredNorm() + gamma / (p * tau) * ys.squaredNorm(),
              1e-12);
  EXPECT_LE(phi0 / n, decentralized_phi0_bound(cp, x0, xs, gamma, p, tau, m.delta) + 1e-9);
  const DualState at = DualState{xs_stacked, ys, 0, 0};
  EXPECT_EQ(decentralized_lyapunov(at, xs_stacked, ys, gamma, p, tau), 0.0);
}

TEST(DecentralizedLyapunov, DualGapStaysInRangeAndVanishes) {
  const Index n = 4, d = 2;
  const ClientProblems cp = quadratic_clients(n, d, 10.0, 8);
  const MixingMatrix m = mixing_matrix(Topology::ring(n));
  const StackedConsensusObjective f(cp);
  const BlockOperator lmat(m.sqrt_laplacian, d);
  const Vec xs = reference_minimizer(cp.global(), ProxOperator::none());
  const double gamma = 1.0 / smoothness_constants(cp.global()).L, p = 0.4, tau = p / gamma;
  const Vec ys = reference_dual_solution(cp, m, xs, gamma, tau);
  const Vec xs_stacked = xs.replicate(n, 1);
  DualState s = DualState::initial(Vec::Ones(n * d), n * d);
  const double phi0 = decentralized_lyapunov(s, xs_stacked, ys, gamma, p, tau);
  Vec proj(n * d);
  for (std::uint64_t t = 0; t < 5000; ++t) {
    s = splitskip_step(s, f, lmat, ProxOperator::indicator_zero(), gamma, tau, p, coin_flip(2, t, p));
    apply_blockwise(m.range_projector, d, Vec(s.y - ys), proj);
    ASSERT_LE((s.y - ys - proj).norm(), 1e-8);
  }
  EXPECT_LE(decentralized_lyapunov(s, xs_stacked, ys, gamma, p, tau), 1e-12 * phi0);
}

TEST(RunDecentralized, CompleteGraphConvergesLinearly) {
  const ClientProblems cp = quadratic_clients(4, 3, 20.0, 9);
  const MixingMatrix m = mixing_matrix(Topology::complete(4));
  const Vec xs = reference_minimizer(cp.global(), ProxOperator::none());
  const double gamma = 1.0 / smoothness_constants(cp.global()).L;
  RunOptions opts;
  opts.log_every = 100;
  const RunRecord r = run_decentralized_scaffnew(cp, m, DecentralizedConfig{gamma, 0.0, 0.3, 2000, 1}, xs, opts);
  EXPECT_LE(r.last().dist_sq, 1e-12 * r.rows.front().dist_sq);
  EXPECT_LE(r.last().lyapunov, 1e-12 * r.rows.front().lyapunov);
  // Monotone above the round-off floor.
  const double floor = 1e-20 * r.rows.front().lyapunov;
  for (std::size_t k = 2; k < r.rows.size() && r.rows[k].lyapunov > floor; ++k) {
    EXPECT_LT(r.rows[k].lyapunov, r.rows[k - 2].lyapunov);
  }
}

TEST(RunDecentralized, CommunicationCountWithOptimalProbability) {
  const ClientProblems cp = quadratic_clients(8, 5, 100.0, 10);
  const MixingMatrix m = mixing_matrix(Topology::ring(8));
  const SmoothnessInfo info = smoothness_constants(cp.global());
  const Vec xs = reference_minimizer(cp.global(), ProxOperator::none());
  const double p = std::min(1.0, std::sqrt(1.0 / (m.delta * info.kappa())));
  RunOptions opts;
  opts.stop_dist_ratio = 1e-6;
  opts.log_every = 1 << 30;
  const RunRecord r = run_decentralized_scaffnew(cp, m, DecentralizedConfig{1.0 / info.L, 0.0, p, 10000000, 1},
                                                 xs, opts);
  ASSERT_LE(r.last().dist_sq, 1e-6 * r.rows.front().dist_sq);
  EXPECT_LE(static_cast<double>(r.last().comm_rounds),
            5.0 * std::sqrt(info.kappa() / m.delta) * std::log(1e6));
}

TEST(RunDecentralized, IdenticalClientsFollowGradientDescent) {
  const Problem one = synthetic::heterogeneous_quadratic(1, 3, 10.0, 1.0, 11);
  const Problem p = Problem::quadratic(std::vector<QuadraticTerm>(2, one.terms().front()));
  const ClientProblems cp(p, heterogeneous_split(p, 2, SplitMode::kRoundRobin));
  const MixingMatrix m = mixing_matrix(Topology::complete(2));
  const double gamma = 1.0 / smoothness_constants(p).L, prob = 0.3;
  DecentralizedState s = DecentralizedState::initial(2, Vec::Ones(3));
  Vec x = Vec::Ones(3);
  for (std::uint64_t t = 0; t < 200; ++t) {
    s = decentralized_scaffnew_round(s, cp, m.w, gamma, prob / gamma, prob, coin_flip(1, t, prob));
    x = x - gamma * p.gradient(x);
    ASSERT_LE((s.mean_x() - x).norm(), 1e-12);
  }
}

}  // namespace
}  // namespace proxskip
