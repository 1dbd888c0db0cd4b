#pragma once

#include <cstdint>
#include <random>

namespace mpf {

// splitmix64 finalizer; used to turn (seed, stream) pairs into well-separated
// engine seeds so that per-sample / per-round / per-chain streams are
// independent and reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace mpf
