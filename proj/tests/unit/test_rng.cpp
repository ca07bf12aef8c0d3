#include "proxskip/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace proxskip {
namespace {

TEST(CounterRng, PureFunctionOfCoordinates) {
  const CounterRng a(42, streams::kCoin), b(42, streams::kCoin);
  for (std::uint64_t s = 0; s < 100; ++s) {
    EXPECT_EQ(a.bits(s, 3), b.bits(s, 3));
    EXPECT_EQ(a.uniform(s, 0), b.uniform(s, 0));
  }
  // Order of evaluation is irrelevant.
  const double late = a.uniform(999, 1);
  (void)a.uniform(0, 0);
  EXPECT_EQ(a.uniform(999, 1), late);
}

TEST(CounterRng, StreamsAndSeedsDiffer) {
  const CounterRng coin(7, streams::kCoin), grad(7, streams::kGradient), other(8, streams::kCoin);
  int same_stream = 0, same_seed = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    same_stream += coin.bits(s, 0) == grad.bits(s, 0);
    same_seed += coin.bits(s, 0) == other.bits(s, 0);
  }
  EXPECT_EQ(same_stream, 0);
  EXPECT_EQ(same_seed, 0);
}

TEST(CounterRng, UniformMomentsAndRange) {
  const CounterRng r(1, streams::kData);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform(static_cast<std::uint64_t>(k), 0);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(CounterRng, NormalMoments) {
  const CounterRng r(2, streams::kGradient);
  double sum = 0.0, sq = 0.0, fourth = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double z = r.normal(static_cast<std::uint64_t>(k), 5);
    sum += z;
    sq += z * z;
    fourth += z * z * z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
  EXPECT_NEAR(fourth / n, 3.0, 0.1);
}

TEST(CounterRng, SplitChildrenIndependent) {
  const CounterRng r(3, streams::kData);
  std::set<std::uint64_t> keys;
  for (std::uint64_t c = 0; c < 100; ++c) keys.insert(r.split(c).key());
  EXPECT_EQ(keys.size(), 100u);
  EXPECT_EQ(r.split(5).key(), r.split(5).key());
}

TEST(DrawSequence, BelowIsUniformAndInRange) {
  const CounterRng r(4, streams::kData);
  std::vector<int> counts(7, 0);
  DrawSequence seq(r, 0);
  for (int k = 0; k < 70000; ++k) {
    const auto v = seq.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(CoinFlip, FrequencyAndExtremes) {
  int heads = 0;
  for (std::uint64_t t = 0; t < 100000; ++t) heads += coin_flip(9, t, 0.3);
  EXPECT_NEAR(heads / 100000.0, 0.3, 0.01);
  for (std::uint64_t t = 0; t < 1000; ++t) EXPECT_TRUE(coin_flip(9, t, 1.0));
  EXPECT_EQ(coin_flip(9, 17, 0.3), coin_flip(9, 17, 0.3));
}

TEST(CoinFlip, MonotoneInProbability) {
  // u < p, so a head at p stays a head at every larger p.
  for (std::uint64_t t = 0; t < 1000; ++t) {
    if (coin_flip(11, t, 0.2)) EXPECT_TRUE(coin_flip(11, t, 0.5));
  }
}

}  // namespace
}  // namespace proxskip
