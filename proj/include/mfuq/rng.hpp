#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mfuq {

// splitmix64 step; used for seed derivation and for hashing evaluation keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds `value` into `seed`; order-sensitive, collision-resistant enough for
// cache keys and frozen-noise streams.
inline std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t value) {
    std::uint64_t s = seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    return splitmix64(s);
}

// Derives an independent stream seed from a master seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    return hash_mix(master, salt);
}

// Deterministic uniform draw on [0,1); avoids std::uniform_real_distribution
// so that streams are identical across standard library implementations.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Box-Muller; consumes two draws per call for stream stability.
inline double standard_normal(std::mt19937_64& gen) {
    double u1 = uniform01(gen);
    double u2 = uniform01(gen);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

} // namespace mfuq
