// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>

namespace polsss {

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive hash of a tuple of integers; used to key random streams.
inline uint64_t hash_values(std::initializer_list<uint64_t> values) {
    uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (uint64_t v : values) h = mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return h;
}

/// PCG32 (O'Neill). Cheap to seed, so every (pixel, sample, channel) owns a stream.
class Pcg32 {
  public:
    explicit Pcg32(uint64_t seed, uint64_t stream = 0xda3e39cb94b95bdbULL) {
        inc_ = (stream << 1u) | 1u;
        state_ = 0;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        const uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        const uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        const uint64_t hi = next_u32() >> 5;  // 27 bits
        const uint64_t lo = next_u32() >> 6;  // 26 bits
        return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
    }

  private:
    uint64_t state_ = 0;
    uint64_t inc_ = 0;
};

}  // namespace polsss
