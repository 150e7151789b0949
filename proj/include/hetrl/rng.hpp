#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace hetrl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a base seed and a path of counters. The result
/// depends only on the values, so work split across threads draws the same
/// numbers as a sequential run.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t k : path) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Draws an index from an unnormalized-safe probability row by inversion.
inline int sample_categorical(Rng& rng, std::span<const double> probs) {
    const double u = uniform01(rng);
    double acc = 0.0;
    int last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = int(i);
        if (u < acc) return int(i);
    }
    return last; // round-off: u landed above the accumulated mass
}

} // namespace hetrl
