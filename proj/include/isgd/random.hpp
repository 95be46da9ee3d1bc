#pragma once

#include <cstdint>
#include <random>

namespace isgd {

/// Independent substreams derived from one user seed. Simulation draws and
/// shuffling draws never share generator state.
enum class RngStream : std::uint32_t { Simulate = 1, Shuffle = 2, Test = 3 };

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

}  // namespace isgd
