#include "proxskip/rng.hpp"

#include <cmath>
#include <numbers>

namespace proxskip {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kNormalDomain = 1ULL << 63;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_unit(std::uint64_t b) { return static_cast<double>(b >> 11) * 0x1.0p-53; }

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL))) {}

std::uint64_t CounterRng::bits(std::uint64_t step, std::uint64_t index) const {
  std::uint64_t z = mix64(key_ + (step + 1) * kGolden);
  return mix64(z ^ mix64(index + 0x8cb92ba72f3d8dd7ULL));
}

double CounterRng::uniform(std::uint64_t step, std::uint64_t index) const {
  return to_unit(bits(step, index & ~kNormalDomain));
}

double CounterRng::normal(std::uint64_t step, std::uint64_t index) const {
  const std::uint64_t b1 = bits(step, index | kNormalDomain);
  const std::uint64_t b2 = mix64(b1 ^ kGolden);
  const double u1 = (static_cast<double>(b1 >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = to_unit(b2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CounterRng CounterRng::split(std::uint64_t child) const {
  return CounterRng(mix64(key_ ^ mix64(child + 0x2545f4914f6cdd1dULL)));
}

std::uint64_t DrawSequence::below(std::uint64_t n) {
  // Lemire's multiply-shift; bias is at most n / 2^64.
  const unsigned __int128 product =
      static_cast<unsigned __int128>(rng_.bits(step_, next_++ & ~kNormalDomain)) * n;
  return static_cast<std::uint64_t>(product >> 64);
}

bool coin_flip(std::uint64_t seed, std::uint64_t t, double p) {
  return CounterRng(seed, streams::kCoin).uniform(t, 0) < p;
}

}  // namespace proxskip
