// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fpq/linalg.hpp"
#include "fpq/scale_cast.hpp"
#include "oracles.hpp"

using namespace fpq;

namespace {

group_geometry row_of_groups(std::size_t rows, std::size_t groups_per_row) {
    group_geometry g;
    g.gran = granularity::per_group;
    g.rows = rows;
    g.cols = groups_per_row * 4;
    g.group_size = 4;
    g.groups_per_row = groups_per_row;
    return g;
}

}  // namespace

TEST_CASE("is_pow2 is a bit test, not an epsilon test") {
    for (int e = -40; e <= 40; ++e) CHECK(is_pow2(std::ldexp(1.0, e)));
    CHECK_FALSE(is_pow2(0.75));
    CHECK_FALSE(is_pow2(3.0));
    CHECK_FALSE(is_pow2(1.0 + 1e-15));
    CHECK_FALSE(is_pow2(0.0));
    CHECK_FALSE(is_pow2(-2.0));
    CHECK_FALSE(is_pow2(std::numeric_limits<double>::infinity()));
}

TEST_CASE("constrain_m1 takes each scale to its enclosing power of two") {
    const std::vector<double> in = {6.0, 3.0, 1.5, 0.9, 1.0, 0.5, 0.251};
    const std::vector<double> want = {8.0, 4.0, 2.0, 1.0, 1.0, 0.5, 0.5};
    CHECK(constrain_m1(in) == want);
    CHECK_THROWS_AS(constrain_m1({0.0}), std::invalid_argument);
    CHECK_THROWS_AS(constrain_m1({-1.0}), std::invalid_argument);

    // bracket [S, 2S) and exact powers of two, over random magnitudes
    const fpq::counter_rng rng{99};
    std::vector<double> scales;
    for (std::uint64_t i = 0; i < 10000; ++i)
        scales.push_back(std::ldexp(1.0 + rng.uniform_at(2 * i),
                                    int(rng.bits_at(2 * i + 1) % 41) - 20));
    const std::vector<double> out = constrain_m1(scales);
    for (std::size_t i = 0; i < scales.size(); ++i) {
        CHECK(is_pow2(out[i]));
        CHECK(out[i] >= scales[i]);
        CHECK(out[i] < 2.0 * scales[i]);
    }
}

TEST_CASE("constrain_m2 preserves the group maximum and halves the rest into place") {
    const group_geometry geo = row_of_groups(1, 4);
    const std::vector<double> in = {6.0, 3.0, 1.5, 0.9};
    const std::vector<double> want = {6.0, 3.0, 1.5, 0.75};
    CHECK(constrain_m2(in, geo, 1) == want);
    CHECK_THROWS_AS(constrain_m2({1.0, 0.0, 1.0, 1.0}, geo, 1), std::invalid_argument);

    // bracket (S/2, S], the maximum survives untouched, ratios are powers of two
    const fpq::counter_rng rng{123};
    const group_geometry big = row_of_groups(2500, 4);
    std::vector<double> scales;
    for (std::uint64_t i = 0; i < 10000; ++i)
        scales.push_back(std::ldexp(1.0 + rng.uniform_at(2 * i),
                                    int(rng.bits_at(2 * i + 1) % 41) - 20));
    const std::vector<double> out = constrain_m2(scales, big, 1);
    for (std::size_t g = 0; g < 2500; ++g) {
        double smax = 0.0;
        std::size_t arg = 0;
        for (std::size_t j = 4 * g; j < 4 * g + 4; ++j)
            if (scales[j] > smax) {
                smax = scales[j];
                arg = j;
            }
        CHECK(out[arg] == smax);
        int ea = 0, eb = 0;
        const double sig = std::frexp(smax, &ea);
        for (std::size_t j = 4 * g; j < 4 * g + 4; ++j) {
            CHECK(out[j] <= scales[j]);
            CHECK(out[j] > 0.5 * scales[j]);
            CHECK(std::frexp(out[j], &eb) == sig);
        }
    }
}

TEST_CASE("m2 compute groups cover whole scale rows, ragged at the tail") {
    const group_geometry geo = row_of_groups(5, 3);  // 15 scales, 3 per row
    CHECK(m2_group_span(geo, 2, 0) == std::pair<std::size_t, std::size_t>{0, 6});
    CHECK(m2_group_span(geo, 2, 5) == std::pair<std::size_t, std::size_t>{0, 6});
    CHECK(m2_group_span(geo, 2, 6) == std::pair<std::size_t, std::size_t>{6, 12});
    CHECK(m2_group_span(geo, 2, 14) == std::pair<std::size_t, std::size_t>{12, 15});  // ragged
    CHECK_THROWS_AS(m2_group_span(geo, 0, 0), std::invalid_argument);

    group_geometry token;
    token.gran = granularity::per_token;
    token.rows = 7;
    token.cols = 3;
    CHECK(m2_group_span(token, 3, 4) == std::pair<std::size_t, std::size_t>{3, 6});

    group_geometry whole;
    whole.gran = granularity::per_tensor;
    CHECK(m2_group_span(whole, 1, 0) == std::pair<std::size_t, std::size_t>{0, 1});
}

TEST_CASE("constrain_requantize constrains scales and re-rounds codes") {
    const tensor w = oracle::random_tensor({6, 24}, 21);
    for (const char* text : {"fp4:e2m1:group8", "int4:asym:group8", "int8:sym:token"}) {
        const quantized_tensor q = quantize(w, parse_quant_spec(text));
        for (const auto method : {scale_constraint::m1, scale_constraint::m2}) {
            const quantized_tensor c = constrain_requantize(w, q, method, 1);
            CHECK(c.spec.constraint == method);
            const std::vector<double> want =
                method == scale_constraint::m1 ? constrain_m1(q.scales)
                                               : constrain_m2(q.scales, q.geometry(), 1);
            CHECK(c.scales == want);
            // re-rounded codes beat relabeled codes
            quantized_tensor relabeled = q;
            relabeled.spec = c.spec;
            relabeled.scales = c.scales;
            relabeled.zero_points = c.zero_points;
            CHECK(frobenius_diff(w, dequantize(c)) <=
                  frobenius_diff(w, dequantize(relabeled)) + 1e-12);
        }
    }
    const quantized_tensor q = quantize(w, parse_quant_spec("int8:sym:token"));
    CHECK_THROWS_AS(constrain_requantize(w, q, scale_constraint::none, 1),
                    std::invalid_argument);
}

TEST_CASE("m1 cast re-encodes value times scale against base 1") {
    // a single group holding 1.5 * 8: the 4-bit value 1.5 with scale 2^3
    quantized_tensor q4;
    q4.spec = parse_quant_spec("fp4:e2m1:tensor:m1");
    q4.shape = {1, 2};
    q4.scales = {8.0};
    q4.codes = {mf_encode_nearest(minifloat_format::e2m1(), 1.5),
                mf_encode_nearest(minifloat_format::e2m1(), -4.0)};

    const cast_result r = cast_group_to_fp8(q4);
    CHECK(r.saturations == 0);
    CHECK(r.q.scales == std::vector<double>{1.0});
    CHECK(mf_decode(minifloat_format::e5m2(), r.q.codes[0]) == 12.0);
    CHECK(mf_decode(minifloat_format::e5m2(), r.q.codes[1]) == -32.0);
    CHECK(frobenius_diff(dequantize(r.q), dequantize(q4)) == 0.0);
}

TEST_CASE("m2 cast shifts every group onto the shared maximum scale") {
    quantized_tensor q4;
    q4.spec = parse_quant_spec("fp4:e2m1:group2:m2");
    q4.shape = {1, 4};
    q4.scales = {4.0, 0.5};  // ratio 8, a power of two
    const auto f4 = minifloat_format::e2m1();
    q4.codes = {mf_encode_nearest(f4, 1.5), mf_encode_nearest(f4, 1.0),
                mf_encode_nearest(f4, 1.5), mf_encode_nearest(f4, -2.0)};

    const cast_result r = cast_group_to_fp8(q4);
    CHECK(r.saturations == 0);
    CHECK(r.q.scales == std::vector<double>{4.0, 4.0});
    const auto f8 = minifloat_format::e5m2();
    CHECK(mf_decode(f8, r.q.codes[0]) == 1.5);
    CHECK(mf_decode(f8, r.q.codes[1]) == 1.0);
    CHECK(mf_decode(f8, r.q.codes[2]) == 0.1875);  // 1.5 / 8
    CHECK(mf_decode(f8, r.q.codes[3]) == -0.25);
    CHECK(frobenius_diff(dequantize(r.q), dequantize(q4)) == 0.0);
}

TEST_CASE("cast saturates adversarial scales to the target maximum") {
    quantized_tensor q4;
    q4.spec = parse_quant_spec("fp4:e2m1:tensor:m1");
    q4.shape = {1, 2};
    q4.scales = {std::ldexp(1.0, 20)};
    const auto f4 = minifloat_format::e2m1();
    q4.codes = {mf_encode_nearest(f4, 6.0), mf_encode_nearest(f4, -6.0)};

    const cast_result r = cast_group_to_fp8(q4);
    CHECK(r.saturations == 2);
    const auto f8 = minifloat_format::e5m2();
    CHECK(mf_decode(f8, r.q.codes[0]) == mf_max_finite(f8));
    CHECK(mf_decode(f8, r.q.codes[1]) == -mf_max_finite(f8));
}

TEST_CASE("cast on a full random constrained pipeline is value-exact") {
    const tensor w = oracle::random_tensor({32, 64}, 31);
    for (const char* text : {"fp4:e2m1:group16:m2", "fp4:e2m1:group16:m1"}) {
        const quantized_tensor q4 = quantize(w, parse_quant_spec(text));
        const cast_result r = cast_group_to_fp8(q4);
        CHECK(r.saturations == 0);
        CHECK(frobenius_diff(dequantize(r.q), dequantize(q4)) == 0.0);
        CHECK(r.q.spec.bits == 8);
    }
}

TEST_CASE("cast input validation") {
    const tensor w = oracle::random_tensor({4, 8}, 41);
    const quantized_tensor unconstrained = quantize(w, parse_quant_spec("fp4:e2m1:group4"));
    CHECK_THROWS_AS(cast_group_to_fp8(unconstrained), std::invalid_argument);
    const quantized_tensor int4 = quantize(w, parse_quant_spec("int4:sym:group4:m1"));
    CHECK_THROWS_AS(cast_group_to_fp8(int4), std::invalid_argument);
    const quantized_tensor fp8 = quantize(w, parse_quant_spec("fp8:e4m3:group4:m1"));
    CHECK_THROWS_AS(cast_group_to_fp8(fp8), std::invalid_argument);
    const quantized_tensor ok = quantize(w, parse_quant_spec("fp4:e2m1:group4:m1"));
    CHECK_THROWS_AS(cast_group_to_fp8(ok, minifloat_format::e2m1()), std::invalid_argument);
}
