#pragma once

#include <cstdint>
#include <random>

namespace spikeflow {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used only to derive well-separated seeds, never as
// the simulation RNG itself.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seed for substream `index` of a master seed. Distinct indices give
// independent-looking streams even when master seeds are small integers.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x243f6a8885a308d3ull));
}

inline void fill_gaussian(double* dst, std::size_t n, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) dst[i] = gauss(rng);
}

}  // namespace spikeflow
