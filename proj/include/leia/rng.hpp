#pragma once

// Deterministic per-record randomness. Each draw is keyed by
// (seed, page_id, record_index), so results do not depend on the order
// or parallelism in which records are processed.

#include <cstdint>

namespace leia {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_key(uint64_t seed, uint64_t a, uint64_t b) {
    uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

// Uniform in [0, 1) with 53 bits of precision.
inline double uniform01(uint64_t key) {
    return double(key >> 11) * 0x1.0p-53;
}

inline double record_uniform(uint64_t seed, uint64_t page_id, uint64_t index) {
    return uniform01(mix_key(seed, page_id, index));
}

}  // namespace leia
