// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/minifloat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpq {

namespace {

struct fields {
    bool sign;
    int exp;
    int mant;
};

fields split(const minifloat_format& fmt, std::uint8_t code) {
    const int m = fmt.mant_bits;
    const int e = fmt.exp_bits;
    fields f;
    f.mant = code & ((1 << m) - 1);
    f.exp = (code >> m) & ((1 << e) - 1);
    f.sign = (code >> (e + m)) & 1;
    return f;
}

// Magnitude codes (code with the sign bit cleared) decode monotonically, so
// the largest finite magnitude is the top code, minus one when the top code
// is the reserved NaN pattern.
int max_finite_mag(const minifloat_format& fmt) {
    int mag = (1 << (fmt.exp_bits + fmt.mant_bits)) - 1;
    if (fmt.nans == nan_policy::reserve_max_code) mag -= 1;
    return mag;
}

bool is_nan_code(const minifloat_format& fmt, std::uint8_t code) {
    if (fmt.nans != nan_policy::reserve_max_code) return false;
    const int mag_bits = fmt.exp_bits + fmt.mant_bits;
    return (code & ((1 << mag_bits) - 1)) == (1 << mag_bits) - 1;
}

std::uint8_t compose(const minifloat_format& fmt, bool sign, int mag) {
    return static_cast<std::uint8_t>((int(sign) << (fmt.exp_bits + fmt.mant_bits)) | mag);
}

}  // namespace

void mf_validate(const minifloat_format& fmt) {
    if (fmt.exp_bits < 1 || fmt.mant_bits < 0 || fmt.total_bits() > 8)
        throw std::invalid_argument("minifloat: bit layout must have >=1 exponent bit and fit a byte");
    if (fmt.bias < -64 || fmt.bias > 64)
        throw std::invalid_argument("minifloat: bias out of range");
}

minifloat_format minifloat_format::named(std::string_view name) {
    if (name == "e5m2") return e5m2();
    if (name == "e4m3") return e4m3();
    if (name == "e3m0") return e3m0();
    if (name == "e2m1") return e2m1();
    throw std::invalid_argument("minifloat: unknown format name '" + std::string(name) + "'");
}

std::string minifloat_format::name() const {
    return "e" + std::to_string(exp_bits) + "m" + std::to_string(mant_bits);
}

double mf_decode(const minifloat_format& fmt, std::uint8_t code) {
    mf_validate(fmt);
    if (is_nan_code(fmt, code)) return std::numeric_limits<double>::quiet_NaN();
    const fields f = split(fmt, code);
    const double s = f.sign ? -1.0 : 1.0;
    if (f.exp == 0) {
        if (!fmt.subnormals || f.mant == 0) return s * 0.0;
        return s * std::ldexp(double(f.mant), 1 - fmt.bias - fmt.mant_bits);
    }
    return s * std::ldexp(double((1 << fmt.mant_bits) + f.mant), f.exp - fmt.bias - fmt.mant_bits);
}

double mf_max_finite(const minifloat_format& fmt) {
    mf_validate(fmt);
    return mf_decode(fmt, static_cast<std::uint8_t>(max_finite_mag(fmt)));
}

std::uint8_t mf_encode_nearest(const minifloat_format& fmt, double x) {
    mf_validate(fmt);
    if (std::isnan(x)) throw std::domain_error("minifloat: cannot encode NaN");
    const bool sign = std::signbit(x);
    const double a = std::fabs(x);
    if (a == 0.0) return compose(fmt, sign, 0);

    const int mag_max = max_finite_mag(fmt);
    const double max_fin = mf_decode(fmt, static_cast<std::uint8_t>(mag_max));
    if (a >= max_fin) return compose(fmt, sign, mag_max);

    const int m = fmt.mant_bits;
    const int emin = 1 - fmt.bias;
    int ue;  // floor(log2(a))
    std::frexp(a, &ue);
    ue -= 1;

    int mag;
    if (ue < emin) {
        // below the normal range
        if (fmt.subnormals) {
            const double q = std::ldexp(1.0, emin - m);  // subnormal quantum
            const double r = std::nearbyint(a / q);      // ties-to-even == even mantissa field
            mag = static_cast<int>(r);                   // r == 2^m lands on the first normal code
        } else {
            // grid is {0, 2^emin}; both mantissa fields are even, so the tie
            // falls to the smaller magnitude
            mag = (a <= std::ldexp(1.0, emin - 1)) ? 0 : (1 << m);
        }
    } else {
        const double q = std::ldexp(1.0, ue - m);  // grid step in this binade
        const double t = a / q;                    // exact: q is a power of two
        double r = std::nearbyint(t);
        if (m == 0 && r == 2.0 && t == 1.5)
            r = 1.0;  // equal mantissa parity across the binade edge: smaller magnitude
        int mant = static_cast<int>(r) - (1 << m);
        if (mant == (1 << m)) {  // rounded across the binade edge
            ue += 1;
            mant = 0;
        }
        mag = ((ue + fmt.bias) << m) | mant;
    }
    return compose(fmt, sign, mag);
}

std::vector<double> mf_enumerate_values(const minifloat_format& fmt) {
    mf_validate(fmt);
    std::vector<double> vals;
    const int n = 1 << fmt.total_bits();
    vals.reserve(n);
    for (int code = 0; code < n; ++code) {
        if (is_nan_code(fmt, static_cast<std::uint8_t>(code))) continue;
        double v = mf_decode(fmt, static_cast<std::uint8_t>(code));
        if (v == 0.0) v = 0.0;  // collapse -0 into +0
        vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

}  // namespace fpq
