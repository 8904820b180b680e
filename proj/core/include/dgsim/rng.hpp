#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace dgsim {

// SplitMix64 (Steele, Lea & Flood; constants per Vigna's reference code).
// The generator is spelled out here so that every implementation of this
// file format and of the simulator reproduces identical streams bit for bit:
//
//   state += 0x9e3779b97f4a7c15
//   z = state
//   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//   output = z ^ (z >> 31)
//
// Doubles are formed from the top 53 bits: (next() >> 11) * 2^-53, uniform
// in [0, 1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, bound), bound >= 1. Rejection from power-of-two
  // masked draws keeps the result unbiased and platform-independent.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t mask = bound - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      const std::uint64_t v = next() & mask;
      if (v < bound) return v;
    }
  }

 private:
  std::uint64_t state_;
};

// One SplitMix64 output step, used as the seed mixer.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the label bytes.
inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives the seed of a named consumer stream. Adding a consumer with a new
// label never perturbs existing streams.
inline std::uint64_t stream_seed(std::uint64_t base, std::string_view label) {
  return mix_seed(base, hash_label(label));
}

inline std::uint64_t seed_component(double value) {
  return std::bit_cast<std::uint64_t>(value);
}

}  // namespace dgsim
