#pragma once

#include <cstdint>
#include <random>

namespace tutorloop {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic per-unit seeds: episodes, groups and injection draws each get
// a seed derived from (base, a, b) so parallel scheduling never changes outcomes.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s = h ^ (a + 0x9e3779b97f4a7c15ULL);
    h = splitmix64(s);
    s = h ^ (b + 0xd1b54a32d192ed03ULL);
    return splitmix64(s);
}

// Portable uniform in [0,1): 53 mantissa bits from the top of the engine output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Seed derivation for strings (task ids) via FNV-1a.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

}  // namespace tutorloop
