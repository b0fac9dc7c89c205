// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "fpq/minifloat.hpp"
#include "fpq/rng.hpp"
#include "oracles.hpp"

using fpq::minifloat_format;
using fpq::mf_decode;
using fpq::mf_encode_nearest;
using fpq::mf_enumerate_values;
using fpq::mf_max_finite;
using fpq::mf_validate;

namespace {

minifloat_format e4m3_reserved() {
    minifloat_format f = minifloat_format::e4m3();
    f.nans = fpq::nan_policy::reserve_max_code;
    return f;
}

minifloat_format e2m1_no_subnormals() {
    minifloat_format f = minifloat_format::e2m1();
    f.subnormals = false;
    return f;
}

const minifloat_format presets[] = {minifloat_format::e5m2(), minifloat_format::e4m3(),
                                    minifloat_format::e3m0(), minifloat_format::e2m1()};

}  // namespace

TEST_CASE("decode matches the independent bit-layout oracle on every code") {
    for (const auto& f : {presets[0], presets[1], presets[2], presets[3], e4m3_reserved(),
                          e2m1_no_subnormals()}) {
        const int n = 1 << f.total_bits();
        for (int c = 0; c < n; ++c) {
            const double got = mf_decode(f, std::uint8_t(c));
            const double want = oracle::mf_decode(f, std::uint8_t(c));
            if (std::isnan(want)) {
                CHECK(std::isnan(got));
            } else {
                CHECK(got == want);
            }
        }
    }
}

TEST_CASE("largest finite magnitudes") {
    CHECK(mf_max_finite(minifloat_format::e2m1()) == 6.0);
    CHECK(mf_max_finite(minifloat_format::e3m0()) == 16.0);
    CHECK(mf_max_finite(minifloat_format::e4m3()) == 480.0);
    CHECK(mf_max_finite(minifloat_format::e5m2()) == 114688.0);
    CHECK(mf_max_finite(e4m3_reserved()) == 448.0);
}

TEST_CASE("e2m1 value table") {
    const std::vector<double> want = {-6, -4, -3, -2, -1.5, -1, -0.5, 0,
                                      0.5, 1,  1.5, 2,  3,    4,  6};
    CHECK(mf_enumerate_values(minifloat_format::e2m1()) == want);
}

TEST_CASE("e3m0 value table is signed powers of two") {
    const std::vector<double> vals = mf_enumerate_values(minifloat_format::e3m0());
    REQUIRE(vals.size() == 15);
    for (int k = 0; k < 7; ++k) {
        CHECK(vals[std::size_t(7 + 1 + k)] == std::ldexp(1.0, k - 2));
        CHECK(vals[std::size_t(7 - 1 - k)] == -std::ldexp(1.0, k - 2));
    }
    CHECK(vals[7] == 0.0);
}

TEST_CASE("enumerate_values is sorted, unique, and complete") {
    for (const auto& f : presets) {
        const auto vals = mf_enumerate_values(f);
        // every code yields a value; the two zeros collapse into one entry
        CHECK(vals.size() == (std::size_t(1) << f.total_bits()) - 1);
        const std::set<double> uniq(vals.begin(), vals.end());
        CHECK(uniq.size() == vals.size());
        CHECK(std::is_sorted(vals.begin(), vals.end()));
    }
    // the reserved pattern removes one magnitude (both signs of it)
    CHECK(mf_enumerate_values(e4m3_reserved()).size() == 253);
}

TEST_CASE("tie cases round to the even mantissa field") {
    const auto f = minifloat_format::e2m1();
    const auto enc = [&](double x) { return mf_decode(f, mf_encode_nearest(f, x)); };
    CHECK(enc(0.75) == 1.0);   // 0.5 (odd mant) vs 1.0 (even mant)
    CHECK(enc(1.25) == 1.0);   // 1.0 (even) vs 1.5 (odd)
    CHECK(enc(1.75) == 2.0);   // 1.5 (odd) vs 2.0 (even)
    CHECK(enc(2.5) == 2.0);    // 2 (even) vs 3 (odd)
    CHECK(enc(5.0) == 4.0);    // 4 (even) vs 6 (odd)
    CHECK(enc(0.25) == 0.0);   // 0 (even) vs 0.5 (odd)
    CHECK(enc(-0.75) == -1.0);
    CHECK(enc(-2.5) == -2.0);
}

TEST_CASE("zero-mantissa formats break equal-parity ties to the smaller magnitude") {
    const auto f = minifloat_format::e3m0();
    const auto enc = [&](double x) { return mf_decode(f, mf_encode_nearest(f, x)); };
    CHECK(enc(1.5) == 1.0);
    CHECK(enc(3.0) == 2.0);
    CHECK(enc(12.0) == 8.0);
    CHECK(enc(0.375) == 0.25);
    CHECK(enc(-1.5) == -1.0);
    CHECK(enc(0.125) == 0.0);  // halfway between 0 and the smallest magnitude
}

TEST_CASE("saturation at and beyond the finite range") {
    for (const auto& f : presets) {
        const double m = mf_max_finite(f);
        CHECK(mf_decode(f, mf_encode_nearest(f, m)) == m);
        CHECK(mf_decode(f, mf_encode_nearest(f, 2.0 * m)) == m);
        CHECK(mf_decode(f, mf_encode_nearest(f, -3.0 * m)) == -m);
        CHECK(mf_decode(f, mf_encode_nearest(f, 1e308)) == m);
    }
}

TEST_CASE("NaN input is rejected and the reserved code is never produced") {
    CHECK_THROWS_AS(mf_encode_nearest(minifloat_format::e5m2(),
                                      std::numeric_limits<double>::quiet_NaN()),
                    std::domain_error);
    const auto fr = e4m3_reserved();
    CHECK(std::isnan(mf_decode(fr, 0x7F)));
    CHECK(std::isnan(mf_decode(fr, 0xFF)));
    const fpq::counter_rng rng{42};
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const double x = (rng.uniform_at(i) - 0.5) * 4.0 * mf_max_finite(fr);
        const std::uint8_t code = mf_encode_nearest(fr, x);
        CHECK_FALSE(std::isnan(mf_decode(fr, code)));
    }
}

TEST_CASE("no-subnormal formats flush the bottom binade") {
    const auto f = e2m1_no_subnormals();
    CHECK(mf_decode(f, 0x01) == 0.0);  // would be 0.5 with subnormals on
    const auto enc = [&](double x) { return mf_decode(f, mf_encode_nearest(f, x)); };
    // grid near zero is {0, 1.0}; the midpoint has equal parity both sides
    CHECK(enc(0.5) == 0.0);
    CHECK(enc(0.51) == 1.0);
    CHECK(enc(0.49) == 0.0);
}

TEST_CASE("encode agrees with the exhaustive-scan oracle") {
    for (const auto& f : {presets[0], presets[1], presets[2], presets[3], e4m3_reserved(),
                          e2m1_no_subnormals()}) {
        const double m = mf_max_finite(f);
        const auto vals = mf_enumerate_values(f);
        std::vector<double> inputs;
        // exact grid points and exact midpoints, the only places ties happen
        for (double v : vals) inputs.push_back(v);
        for (std::size_t i = 0; i + 1 < vals.size(); ++i)
            inputs.push_back(vals[i] / 2.0 + vals[i + 1] / 2.0);
        inputs.insert(inputs.end(), {2.0 * m, -2.0 * m, 0.0});
        const fpq::counter_rng rng{fpq::counter_rng::mix(f.total_bits() * 131u)};
        for (std::uint64_t i = 0; i < 4000; ++i)
            inputs.push_back((rng.uniform_at(2 * i) - 0.5) * 4.0 * m);
        for (std::uint64_t i = 0; i < 4000; ++i)
            inputs.push_back(rng.normal_at(9000 + i) * (m / 3.0));

        for (double x : inputs) {
            const double got = mf_decode(f, mf_encode_nearest(f, x));
            const double want = oracle::mf_nearest(f, x);
            CHECK(got == want);
        }
    }
}

TEST_CASE("format naming and validation") {
    CHECK(minifloat_format::named("e4m3") == minifloat_format::e4m3());
    CHECK(minifloat_format::e5m2().name() == "e5m2");
    CHECK_THROWS_AS(minifloat_format::named("e9m9"), std::invalid_argument);
    minifloat_format bad = minifloat_format::e5m2();
    bad.exp_bits = 0;
    CHECK_THROWS_AS(mf_validate(bad), std::invalid_argument);
    bad = minifloat_format::e5m2();
    bad.mant_bits = 7;  // 1 + 5 + 7 > 8
    CHECK_THROWS_AS(mf_validate(bad), std::invalid_argument);
    bad = minifloat_format::e2m1();
    bad.bias = 99;
    CHECK_THROWS_AS(mf_validate(bad), std::invalid_argument);
}
