#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mmse {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// stream id (upper half) and a 64-bit block index (lower half), so any
/// (seed, stream) pair yields an independent sequence without coordination.
/// Streams are how Monte-Carlo trials get their own substream.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 2) {
      out_ = bijection(Block{static_cast<std::uint32_t>(block_),
                             static_cast<std::uint32_t>(block_ >> 32),
                             static_cast<std::uint32_t>(stream_),
                             static_cast<std::uint32_t>(stream_ >> 32)},
                       key_);
      ++block_;
      pos_ = 0;
    }
    const std::uint64_t lo = out_[2 * pos_];
    const std::uint64_t hi = out_[2 * pos_ + 1];
    ++pos_;
    return lo | (hi << 32);
  }

  /// The raw 10-round Philox bijection; exposed for known-answer tests.
  static Block bijection(Block ctr, Key key) noexcept {
    constexpr std::uint64_t kM0 = 0xD2511F53u;
    constexpr std::uint64_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = kM0 * ctr[0];
      const std::uint64_t p1 = kM1 * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block out_{};
  int pos_ = 2;
};

/// Stream ids are namespaced by purpose so that, e.g., noise draws never
/// alias channel draws for the same trial.
enum class StreamTag : std::uint64_t {
  bits = 1,
  channel = 2,
  noise = 3,
  analysis = 4,
};

constexpr std::uint64_t substream(StreamTag tag, std::uint64_t index) noexcept {
  return (static_cast<std::uint64_t>(tag) << 56) ^ index;
}

/// Uniform double in [0, 1) with 53 random mantissa bits.
inline double uniform01(Philox4x32& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Circularly symmetric complex Gaussian with unit variance, CN(0, 1),
/// by Box-Muller.
inline std::complex<double> complex_normal(Philox4x32& rng) noexcept {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-std::log(u1));  // sqrt(-2 ln u1) * (1/sqrt 2)
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace mmse
