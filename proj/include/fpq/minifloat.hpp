// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fpq {

/// How (and whether) a format reserves a code for NaN.
///  - none:             every code is a finite value; two signed zeros.
///  - reserve_max_code: the all-ones exponent+mantissa pattern is NaN and the
///                      largest finite magnitude moves one code down
///                      (hardware-style E4M3 behaves this way).
enum class nan_policy : std::uint8_t { none = 0, reserve_max_code = 1 };

/// Sign + exponent + mantissa bit layout of a small float format.
/// Codes are right-aligned in a byte: [sign | exp_bits | mant_bits].
struct minifloat_format {
    int exp_bits = 0;
    int mant_bits = 0;
    int bias = 0;  // exponent bias; ieee_bias(exp_bits) unless overridden
    nan_policy nans = nan_policy::none;
    bool subnormals = true;

    int total_bits() const { return 1 + exp_bits + mant_bits; }

    static int ieee_bias(int exp_bits) { return (1 << (exp_bits - 1)) - 1; }

    static minifloat_format e5m2() { return make(5, 2); }
    static minifloat_format e4m3() { return make(4, 3); }
    static minifloat_format e3m0() { return make(3, 0); }
    static minifloat_format e2m1() { return make(2, 1); }

    static minifloat_format make(int exp_bits, int mant_bits) {
        return {exp_bits, mant_bits, ieee_bias(exp_bits), nan_policy::none, true};
    }

    /// Preset lookup by name ("e5m2", "e4m3", "e3m0", "e2m1"); throws
    /// std::invalid_argument on anything else.
    static minifloat_format named(std::string_view name);

    /// Preset name when this format matches one, otherwise "eXmY".
    std::string name() const;

    bool operator==(const minifloat_format&) const = default;
};

/// Throws std::invalid_argument unless 1 <= exp_bits, 0 <= mant_bits and the
/// code fits in a byte (total_bits <= 8).
void mf_validate(const minifloat_format& fmt);

/// Value of a code. Total over all codes; the reserved NaN code (if any)
/// decodes to a quiet NaN. Exponent field 0 is subnormal (or flushes to zero
/// when subnormals are off); all other fields are normal values
/// sign * (1 + mant/2^mant_bits) * 2^(exp - bias).
double mf_decode(const minifloat_format& fmt, std::uint8_t code);

/// Nearest representable value, round-to-nearest-even: ties pick the
/// candidate with the even mantissa field (equal parity falls back to the
/// smaller magnitude, which only arises with subnormals off). Magnitudes at
/// or above max_finite saturate to +-max_finite. Throws std::domain_error on
/// NaN input; never returns the reserved NaN code.
std::uint8_t mf_encode_nearest(const minifloat_format& fmt, double x);

/// Largest finite magnitude of the format.
double mf_max_finite(const minifloat_format& fmt);

/// All distinct finite values in ascending order; the two signed zeros
/// collapse into a single 0 entry and reserved NaN codes are skipped.
std::vector<double> mf_enumerate_values(const minifloat_format& fmt);

}  // namespace fpq
