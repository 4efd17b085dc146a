#pragma once

#include <cstdint>
#include <random>

namespace ffd {

using Rng = std::mt19937_64;

// SplitMix64 finaliser; turns (base seed, stream index) into independent
// engine seeds so sub-streams do not depend on generation order.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ (index * 0xD1B54A32D192ED03ull + 1));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t index) { return Rng(derive_seed(base, index)); }

}  // namespace ffd
