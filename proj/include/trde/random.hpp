#pragma once

#include <cstdint>

namespace trde {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream: a pure function of (seed, row, column), so any
/// partition of rows across workers sees the same numbers.
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t row, std::uint64_t column) {
    return mix64(mix64(mix64(seed) ^ row) ^ (column * 0xd1b54a32d192ed03ULL));
}

/// Uniform double in [0,1) with 53 random bits.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t row, std::uint64_t column) {
    return static_cast<double>(counter_bits(seed, row, column) >> 11) * 0x1.0p-53;
}

}  // namespace trde
