// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace fpq {

/// Counter-based generator: every draw is a pure function of (seed, index),
/// so streams are reproducible bit-for-bit for any thread count and can be
/// sampled in parallel at any offset.
struct counter_rng {
    std::uint64_t seed;

    static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits_at(std::uint64_t index) const { return mix(seed ^ mix(index)); }

    /// Uniform in (0, 1], never zero (safe under log).
    double uniform_at(std::uint64_t index) const {
        return double((bits_at(index) >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on two sub-draws.
    double normal_at(std::uint64_t index) const {
        const double u1 = uniform_at(index * 2);
        const double u2 = uniform_at(index * 2 + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
};

}  // namespace fpq
