#include "mvsense/random.hpp"

namespace mvsense {

Rng make_stream(std::uint64_t seed, std::uint64_t index, Stream purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return Rng(seq);
}

} // namespace mvsense
