#pragma once

#include <cstdint>
#include <string_view>

namespace binsleuth {

// Deterministic RNG used throughout the pipeline. The algorithms are fixed
// and part of the tool's reproducibility contract: identical seeds produce
// identical byte streams on every platform and in every release.
//
//   - seed expansion / derivation: SplitMix64
//   - generator: xoshiro256** (Blackman & Vigna)
//   - bounded draws: masked rejection sampling (unbiased)
//   - unit doubles: top 53 bits scaled by 2^-53

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// 64-bit FNV-1a, used to fold strings (file paths, spec keys) into seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable seed derivation: children of one master seed never collide with
// children of another in practice, and the mapping is order-insensitive
// across call sites.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    std::uint64_t s = master ^ (salt * 0x9e3779b97f4a7c15ULL);
    return splitmix64_next(s);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view salt) {
    return derive_seed(master, fnv1a64(salt));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t mask = mask_for(bound);
        for (;;) {
            const std::uint64_t v = next_u64() & mask;
            if (v < bound) return v;
        }
    }

    // Uniform double in [0, 1).
    double unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    // Smallest all-ones mask covering bound-1.
    static std::uint64_t mask_for(std::uint64_t bound) {
        std::uint64_t m = bound - 1;
        m |= m >> 1;
        m |= m >> 2;
        m |= m >> 4;
        m |= m >> 8;
        m |= m >> 16;
        m |= m >> 32;
        return m;
    }

    std::uint64_t state_[4];
};

} // namespace binsleuth
