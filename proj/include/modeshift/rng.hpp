#pragma once

#include <cmath>
#include <cstdint>

namespace modeshift::rng {

// SplitMix64 output function (Steele/Lea/Flood). Stateless: the i-th value of
// a stream seeded with s is mix64(s + (i+1) * kGamma), so any position can be
// reproduced in another language from (seed, index) alone.
inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Child stream seed for substream `index` of `seed`. Used wherever work is
// split across candidates / samples / trials so that results do not depend on
// scheduling order.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + (index + 1) * 0x94D049BB133111EBULL);
}

// Deterministic sequential stream over SplitMix64.
//
// Conversions are fixed so alternate-language ports reproduce the sequence:
//   unit():   u = ((x >> 11) + 1) * 2^-53            in (0, 1]
//   normal(): Box-Muller, two unit() draws per call:
//             sqrt(-2 ln u1) * cos(2 pi u2)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform in (0, 1]; never zero, so log() below is finite.
  double unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal. Consumes exactly two uniforms (the Box-Muller sine
  // partner is discarded to keep the stream position a function of the
  // number of normal() calls).
  double normal() {
    const double u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n). Rejection keeps it exactly uniform.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace modeshift::rng
