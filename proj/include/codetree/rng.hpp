#pragma once

#include <cstdint>

namespace codetree {

// splitmix64 counter stream. Deliberately not std::mt19937 + distributions:
// those are implementation-defined, and reproducibility across standard
// libraries is part of the output contract.
struct Stream {
    std::uint64_t state = 0;

    Stream() = default;
    explicit Stream(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53 random bits
    double next_unit() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in {0, ..., n-1}
    std::size_t next_index(std::size_t n) {
        return (std::size_t)(((__uint128_t)next_u64() * n) >> 64);
    }
};

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    v *= 0x9e3779b97f4a7c15ull;
    v ^= v >> 32;
    h ^= v;
    h *= 0xff51afd7ed558ccdull;
    return h ^ (h >> 33);
}

// Independent child stream for (master seed, index, salt). Each trial, block,
// or worker derives its own stream so results do not depend on scheduling.
inline Stream derive(std::uint64_t master, std::uint64_t index, std::uint64_t salt = 0) {
    return Stream(hash_mix(hash_mix(master ^ 0x517cc1b727220a95ull, index), salt));
}

}  // namespace codetree
