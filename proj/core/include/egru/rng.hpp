// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace egru {

// std::uniform_real_distribution and friends are implementation-defined;
// reproducibility across standard libraries requires scaling the raw
// mt19937_64 stream ourselves.

/// Uniform double in [0, 1), 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform float in [lo, hi).
inline float uniform_float(std::mt19937_64& rng, float lo, float hi) {
    const float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f; // 24 bits
    return lo + (hi - lo) * u;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform_unit(rng) * static_cast<double>(n));
}

} // namespace egru
