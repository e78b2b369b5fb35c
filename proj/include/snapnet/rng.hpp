#pragma once

// Counter-based random numbers.
//
// The generator is Philox4x32-10 (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC'11). A stream is identified by (seed, stream id);
// draw n of a stream is a pure function of (seed, stream id, n), so results
// do not depend on platform, thread count or scheduling order. All
// floating-point conversions below are written out explicitly instead of
// going through <random> distributions, whose algorithms are
// implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace snapnet {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block: 10 rounds of the bijection keyed by `key`.
inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Sequential view over the Philox stream (seed, stream). Satisfies
/// UniformRandomBitGenerator so it can drive std::shuffle and friends when
/// cross-platform reproducibility is not needed.
class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }

  result_type operator()() {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n) (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal deviate (Box-Muller, one value per call).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  void refill() {
    const PhiloxCounter ctr{static_cast<std::uint32_t>(block_index_),
                            static_cast<std::uint32_t>(block_index_ >> 32),
                            static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(stream_ >> 32)};
    block_ = philox4x32_10(ctr, key_);
    ++block_index_;
    lane_ = 0;
  }

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  PhiloxCounter block_{};
  int lane_ = 4;
};

/// Derives an independent seed for a named sub-task (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace snapnet
