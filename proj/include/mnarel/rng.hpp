#pragma once

#include <cstdint>
#include <random>

namespace mnar {

// splitmix64, used to derive independent substream seeds from (seed, counter).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based substream: the engine for replicate `stream` of run `seed`
// depends only on (seed, stream), never on thread scheduling.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = splitmix64(seed ^ splitmix64(stream + 1));
  return std::mt19937_64(s);
}

}  // namespace mnar
