#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qvoter {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of replica `index` under `master`. Streams depend only on these two
/// numbers, never on scheduling.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

Engine make_stream(std::uint64_t master, std::uint64_t index);

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by multiply-shift (n < 2^32).
inline std::uint32_t uniform_index(Engine& rng, std::uint32_t n) {
  return static_cast<std::uint32_t>(((rng() >> 32) * n) >> 32);
}

inline double exponential(Engine& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace qvoter
