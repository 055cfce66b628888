#pragma once

#include <cstdint>
#include <random>

namespace obsest {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream `stream` derived from a root seed. Streams
/// depend only on (seed, stream), so work split across threads draws the
/// same numbers as a serial run.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(stream_seed(seed, stream));
}

}  // namespace obsest
