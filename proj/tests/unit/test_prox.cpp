#include "proxskip/errors.hpp"
#include "proxskip/prox.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace proxskip {
namespace {

using testing::normal_vec;

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(Prox, ConsensusAverages) {
  const Vec out = prox(ProxOperator::consensus(2, 2), 1.0, vec({1, 3, 3, 1}));
  EXPECT_EQ(out, vec({2, 2, 2, 2}));
}

TEST(Prox, SoftThreshold) {
  EXPECT_EQ(prox(ProxOperator::l1(1.0), 1.0, vec({3, -0.5})), vec({2, 0}));
  EXPECT_EQ(prox(ProxOperator::l1(0.5), 2.0, vec({-3, 0.9, 1.0})), vec({-2, 0, 0}));
}

TEST(Prox, SquaredL2Shrinks) {
  EXPECT_DOUBLE_EQ(prox(ProxOperator::squared_l2(1.0), 0.5, vec({2}))[0], 1.0);
}

TEST(Prox, MatchesBruteForceMinimizationInOneDimension) {
  // argmin_y 1/2 (y - x)^2 + s psi(y) by dense grid search.
  for (const ProxOperator& op : {ProxOperator::l1(0.7), ProxOperator::squared_l2(0.7)}) {
    for (double x : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
      const double s = 0.8;
      double best = 0.0, best_val = 1e300;
      for (int k = -40000; k <= 40000; ++k) {
        const double y = k * 1e-4;
        const double v = 0.5 * (y - x) * (y - x) + s * op.value(vec({y}));
        if (v < best_val) {
          best_val = v;
          best = y;
        }
      }
      EXPECT_NEAR(prox(op, s, vec({x}))[0], best, 2e-4);
    }
  }
}

TEST(Prox, RejectsBadScaleAndDimensions) {
  EXPECT_THROW(prox(ProxOperator::l1(1.0), 0.0, vec({1})), ArgumentError);
  EXPECT_THROW(prox(ProxOperator::l1(1.0), -1.0, vec({1})), ArgumentError);
  EXPECT_THROW(prox(ProxOperator::consensus(2, 2), 1.0, vec({1, 2, 3})), ArgumentError);
  EXPECT_THROW(ProxOperator::l1(-1.0), ArgumentError);
  EXPECT_THROW(ProxOperator::consensus(0, 2), ArgumentError);
}

TEST(Prox, ConsensusIdempotentAndInSet) {
  std::mt19937_64 gen(1);
  const ProxOperator c = ProxOperator::consensus(5, 3);
  for (int k = 0; k < 100; ++k) {
    const Vec x = normal_vec(15, gen, 10.0);
    const Vec p = prox(c, 0.3, x);
    EXPECT_EQ(prox(c, 1.7, p), p);
    for (Index i = 1; i < 5; ++i) EXPECT_EQ(p.segment(3 * i, 3), p.segment(0, 3));
  }
}

TEST(Prox, IndicatorZeroAndItsConjugate) {
  EXPECT_EQ(prox(ProxOperator::indicator_zero(), 2.0, vec({1.5, -2})), vec({0, 0}));
  EXPECT_EQ(prox_conjugate(ProxOperator::indicator_zero(), 2.0, vec({1.5, -2})), vec({1.5, -2}));
  EXPECT_EQ(prox_conjugate(ProxOperator::indicator_zero(), 1.0, Vec::Zero(3)), Vec::Zero(3));
}

TEST(Prox, MoreauDecompositionForL1) {
  const ProxOperator op = ProxOperator::l1(1.0);
  const Vec x = vec({3, -0.5});
  const Vec conj = prox_conjugate(op, 1.0, x);
  EXPECT_EQ(conj, vec({1, -0.5}));
  EXPECT_EQ(prox(op, 1.0, x) + conj, x);
}

TEST(Prox, UnsupportedConjugates) {
  EXPECT_THROW(prox_conjugate(ProxOperator::squared_l2(1.0), 1.0, vec({1})), UnsupportedOperation);
  EXPECT_THROW(prox_conjugate(ProxOperator::consensus(1, 1), 1.0, vec({1})), UnsupportedOperation);
}

TEST(Prox, FirmNonexpansiveness) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> logscale(-2.0, 2.0);
  for (const ProxOperator& op : {ProxOperator::consensus(3, 4), ProxOperator::l1(0.5),
                                 ProxOperator::squared_l2(2.0), ProxOperator::indicator_zero()}) {
    for (int k = 0; k < 1000; ++k) {
      const Vec x = normal_vec(12, gen, 3.0), y = normal_vec(12, gen, 3.0);
      const double s = std::pow(10.0, logscale(gen));
      const Vec px = prox(op, s, x), py = prox(op, s, y);
      const double lhs = (px - py).squaredNorm() + ((x - px) - (y - py)).squaredNorm();
      EXPECT_LE(lhs, (x - y).squaredNorm() + 1e-12);
    }
  }
}

TEST(Prox, ValueAndZeroDetection) {
  EXPECT_DOUBLE_EQ(ProxOperator::l1(2.0).value(vec({1, -2})), 6.0);
  EXPECT_DOUBLE_EQ(ProxOperator::squared_l2(2.0).value(vec({1, -2})), 10.0);
  EXPECT_TRUE(std::isinf(ProxOperator::indicator_zero().value(vec({1e-3}))));
  EXPECT_EQ(ProxOperator::indicator_zero().value(vec({0})), 0.0);
  EXPECT_TRUE(std::isinf(ProxOperator::consensus(2, 1).value(vec({1, 2}))));
  EXPECT_TRUE(ProxOperator::none().is_zero());
  EXPECT_FALSE(ProxOperator::l1(0.1).is_zero());
}

}  // namespace
}  // namespace proxskip
