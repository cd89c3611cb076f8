#pragma once

#include <cstdint>
#include <random>

namespace entsim {

/// Seed-derivation scheme used throughout the simulator.
///
/// Every stochastic component receives its own sub-seed derived from a single
/// master seed, so a whole run is reproducible from one number and independent
/// sub-simulations never share a random stream. Sub-seed `i` of a master seed
/// `m` is defined as the i-th output of a SplitMix64 generator initialised
/// with `m`. The scheme is part of the output contract: results written with
/// a given seed must be reproducible by any later build.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// i-th sub-seed of `master` (i = 0, 1, ...). Equals the i-th SplitMix64
/// output but is computed in O(1): the generator state after i steps is
/// master + (i+1)*gamma.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master + index * 0x9E3779B97F4A7C15ull;
    return splitmix64_next(state);
}

/// Derivation for nested components: child `index` under a named stream.
/// Mixing the stream tag keeps sibling components decorrelated even when they
/// use the same index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
    return derive_seed(master ^ (0xD1B54A32D192ED03ull * (stream + 1)), index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace entsim
