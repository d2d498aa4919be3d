#pragma once

#include <cstdint>
#include <random>

namespace crm {

/// SplitMix64 finalizer; a good bijective mixer for deriving stream seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of an independent substream identified by (base, stream, index). The
/// result depends only on its arguments, never on evaluation order.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                                  std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(base ^ splitmix64(stream)) + index);
}

using Rng = std::mt19937_64;

}  // namespace crm
