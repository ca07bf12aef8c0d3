#pragma once

#include <cstdint>

namespace proxskip {

/// Stream identifiers. Coins and gradient noise never share a stream, so a noisy
/// run and an exact run with the same seed flip identical coins.
namespace streams {
inline constexpr std::uint64_t kCoin = 0;
inline constexpr std::uint64_t kGradient = 1;
inline constexpr std::uint64_t kData = 2;
}  // namespace streams

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, step, index), so there is no hidden sequential state.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t step, std::uint64_t index) const;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t step, std::uint64_t index) const;
  /// Standard normal (Box-Muller). Drawn from a domain disjoint from `uniform`.
  double normal(std::uint64_t step, std::uint64_t index) const;

  /// Independent child generator.
  CounterRng split(std::uint64_t child) const;

  std::uint64_t key() const noexcept { return key_; }

 private:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  std::uint64_t key_;
};

/// Sequential view of one step of a CounterRng.
class DrawSequence {
 public:
  DrawSequence(const CounterRng& rng, std::uint64_t step, std::uint64_t first_index = 0)
      : rng_(rng), step_(step), next_(first_index) {}

  double uniform() { return rng_.uniform(step_, next_++); }
  double normal() { return rng_.normal(step_, next_++); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  const CounterRng& rng_;
  std::uint64_t step_;
  std::uint64_t next_;
};

/// Bernoulli(p) coin for iteration t, drawn as u < p.
bool coin_flip(std::uint64_t seed, std::uint64_t t, double p);

}  // namespace proxskip
