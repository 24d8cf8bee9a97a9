#pragma once

#include <cstdint>
#include <random>

namespace mvsense {

using Rng = std::mt19937_64;

/// Independent purposes drawing from the same (seed, index) pair.
enum class Stream : std::uint32_t {
  Scene = 1,
  Layout = 2,
  Points = 3,
  Clutter = 4,
  Link = 5,
  Misc = 6,
};

/// Deterministic generator for (seed, sample index, purpose). Results do not
/// depend on how many other streams were created or in which order.
Rng make_stream(std::uint64_t seed, std::uint64_t index, Stream purpose);

inline double uniform(Rng &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

} // namespace mvsense
