// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fpq/quantize.hpp"
#include "fpq/scale_cast.hpp"
#include "oracles.hpp"

using namespace fpq;

namespace {

tensor vec(std::initializer_list<double> v) {
    tensor t(std::vector<std::size_t>{v.size()});
    std::copy(v.begin(), v.end(), t.data.begin());
    return t;
}

double mse_of(const tensor& a, const tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / double(a.numel());
}

}  // namespace

TEST_CASE("spec strings parse and print round trip") {
    for (const char* text : {"int8:asym:token", "int4:sym:tensor", "fp4:e2m1:group256",
                             "fp8:e4m3:group32", "int8:sym:group16:m1", "fp4:e2m1:group256:m2",
                             "fp4:e2m1:group32:m2:4"}) {
        const quant_spec s = parse_quant_spec(text);
        CHECK(to_string(s) == text);
        CHECK(parse_quant_spec(to_string(s)) == s);
    }
    CHECK(parse_quant_spec("fp4:e2m1:group8:m2").m2_rows == 1);
}

TEST_CASE("malformed spec strings are rejected") {
    for (const char* text :
         {"", "int8", "int8:sym", "int7:sym:tensor", "int8:foo:tensor", "fp4:e4m3:tensor",
          "fp8:e2m1:tensor", "fp4:nope:tensor", "int8:sym:group0", "int8:sym:groupx",
          "int8:sym:tensor:m3", "int8:sym:tensor:m2:0", "int8:sym:tensor:m1:junk"})
        CHECK_THROWS_AS(parse_quant_spec(text), std::invalid_argument);
}

TEST_CASE("group geometry spans, ragged tails, and flattening") {
    const quant_spec s = parse_quant_spec("int8:sym:group4");
    const group_geometry g = geometry_of(s, {3, 10});
    CHECK(g.groups_per_row == 3);
    CHECK(g.scale_count() == 9);
    CHECK(g.span_of(0) == std::pair<std::size_t, std::size_t>{0, 4});
    CHECK(g.span_of(2) == std::pair<std::size_t, std::size_t>{8, 10});  // ragged
    CHECK(g.span_of(3) == std::pair<std::size_t, std::size_t>{10, 14});
    CHECK(g.scale_of(9) == 2);
    CHECK(g.scale_of(10) == 3);

    // leading axes flatten into rows
    const group_geometry g3 = geometry_of(parse_quant_spec("int8:sym:group8"), {2, 3, 8});
    CHECK(g3.rows == 6);
    CHECK(g3.scale_count() == 6);

    const group_geometry gt = geometry_of(parse_quant_spec("int8:asym:token"), {5, 7});
    CHECK(gt.scale_count() == 5);
    CHECK(gt.span_of(4) == std::pair<std::size_t, std::size_t>{28, 35});

    CHECK(geometry_of(parse_quant_spec("int8:sym:tensor"), {5, 7}).scale_count() == 1);
    CHECK_THROWS_AS(geometry_of(parse_quant_spec("int8:asym:token"), {5}),
                    std::invalid_argument);
}

TEST_CASE("symmetric int scales follow amax over the top code") {
    const tensor x = vec({-3.0, 1.5, 0.25, 2.0});
    const quantized_tensor q = quantize(x, parse_quant_spec("int8:sym:tensor"));
    const auto want = oracle::quant_group({-3.0, 1.5, 0.25, 2.0}, q.spec);
    CHECK(q.scales[0] == want.scale);
    const tensor d = dequantize(q);
    for (std::size_t i = 0; i < 4; ++i) CHECK(d.data[i] == want.deq[i]);
    CHECK(q.zero_points.empty());
}

TEST_CASE("asymmetric int widens the range to include zero") {
    // all-positive group: lo widens to 0 and the zero point lands at code 0
    const tensor x = vec({2.0, 4.0, 3.0});
    const quantized_tensor q = quantize(x, parse_quant_spec("int8:asym:tensor"));
    CHECK(q.zero_points[0] == 0);
    const auto want = oracle::quant_group({2.0, 4.0, 3.0}, q.spec);
    CHECK(q.scales[0] == want.scale);
    const tensor d = dequantize(q);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.data[i] == want.deq[i]);

    // mixed-sign group: zero point is interior
    const tensor y = vec({-1.0, 3.0});
    const quantized_tensor qy = quantize(y, parse_quant_spec("int8:asym:tensor"));
    const auto wy = oracle::quant_group({-1.0, 3.0}, qy.spec);
    CHECK(qy.scales[0] == wy.scale);
    CHECK(qy.zero_points[0] == wy.zero);
    CHECK(qy.zero_points[0] == 64);
    const tensor dy = dequantize(qy);
    CHECK(dy.data[0] == wy.deq[0]);
    CHECK(dy.data[1] == wy.deq[1]);
}

TEST_CASE("fp groups scale amax onto the format maximum") {
    const tensor x = vec({-12.0, 3.0, 0.75});
    const quantized_tensor q = quantize(x, parse_quant_spec("fp4:e2m1:tensor"));
    const auto want = oracle::quant_group({-12.0, 3.0, 0.75}, q.spec);
    CHECK(q.scales[0] == want.scale);
    const tensor d = dequantize(q);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.data[i] == want.deq[i]);
    // amax maps onto the top of the grid exactly
    CHECK(d.data[0] == -12.0);
}

TEST_CASE("an all-zero group stores scale 1 and zero codes") {
    tensor x(2, 6);
    for (std::size_t i = 6; i < 12; ++i) x.data[i] = (i % 2) ? 0.5 : -0.25;
    for (const char* text : {"int8:sym:token", "int8:asym:token", "fp4:e2m1:token"}) {
        const quantized_tensor q = quantize(x, parse_quant_spec(text));
        CHECK(q.scales[0] == 1.0);
        const tensor d = dequantize(q);
        for (std::size_t i = 0; i < 6; ++i) CHECK(d.data[i] == 0.0);
    }
}

TEST_CASE("per-group quantization matches the scalar oracle groupwise") {
    const tensor x = oracle::random_tensor({4, 10}, 77);
    for (const char* text : {"int4:sym:group4", "int8:asym:group4", "fp4:e2m1:group4",
                             "fp8:e4m3:group4", "fp8:e5m2:group4"}) {
        const quant_spec spec = parse_quant_spec(text);
        const quantized_tensor q = quantize(x, spec);
        const tensor d = dequantize(q);
        const group_geometry geo = q.geometry();
        for (std::size_t g = 0; g < geo.scale_count(); ++g) {
            const auto [b, e] = geo.span_of(g);
            const auto want =
                oracle::quant_group(std::vector<double>(x.data.begin() + std::ptrdiff_t(b),
                                                        x.data.begin() + std::ptrdiff_t(e)),
                                    spec);
            CHECK(q.scales[g] == want.scale);
            for (std::size_t i = b; i < e; ++i) CHECK(d.data[i] == want.deq[i - b]);
        }
    }
}

TEST_CASE("requantizing a reconstruction reproduces codes and scales exactly") {
    const tensor x = oracle::random_tensor({7, 13}, 5);
    for (const char* text : {"int8:sym:tensor", "int8:asym:token", "int4:sym:group5",
                             "int4:asym:group5", "fp4:e2m1:group3", "fp8:e4m3:token",
                             "fp8:e5m2:tensor"}) {
        const quantized_tensor q1 = quantize(x, parse_quant_spec(text));
        const quantized_tensor q2 = quantize(dequantize(q1), parse_quant_spec(text));
        CHECK(q1.codes == q2.codes);
        CHECK(q1.scales == q2.scales);
        CHECK(q1.zero_points == q2.zero_points);
    }
}

TEST_CASE("m1 recipes store enclosing powers of two") {
    const tensor x = oracle::random_tensor({6, 32}, 11);
    const quantized_tensor qu = quantize(x, parse_quant_spec("fp4:e2m1:group8"));
    const quantized_tensor qc = quantize(x, parse_quant_spec("fp4:e2m1:group8:m1"));
    REQUIRE(qc.scales.size() == qu.scales.size());
    for (std::size_t g = 0; g < qc.scales.size(); ++g) {
        CHECK(is_pow2(qc.scales[g]));
        // never shrinks, at most doubles; the unconstrained comparand is the
        // stabilized scale, which may sit an ulp away from the raw one the
        // constraint bracketed, hence the slack
        CHECK(qc.scales[g] >= qu.scales[g] * (1.0 - 1e-12));
        CHECK(qc.scales[g] < 2.0 * qu.scales[g] * (1.0 + 1e-12));
    }
    CHECK(qc.spec.constraint == scale_constraint::m1);
}

TEST_CASE("m2 recipes divide the compute-group maximum by powers of two") {
    const tensor x = oracle::random_tensor({6, 32}, 12);
    const quant_spec su = parse_quant_spec("fp4:e2m1:group8");
    const quantized_tensor qu = quantize(x, su);
    const quantized_tensor qc = quantize(x, parse_quant_spec("fp4:e2m1:group8:m2"));
    const group_geometry geo = qc.geometry();
    for (std::size_t si = 0; si < qc.scales.size();) {
        const auto [b, e] = m2_group_span(geo, 1, si);
        double smax = 0.0;
        for (std::size_t i = b; i < e; ++i) smax = std::max(smax, qc.scales[i]);
        int ea = 0, eb = 0;
        const double sig = std::frexp(smax, &ea);
        for (std::size_t i = b; i < e; ++i) {
            CHECK(std::frexp(qc.scales[i], &eb) == sig);  // power-of-two ratio
            // bracketing against the unconstrained scales, with ulp slack for
            // the stabilization of the comparand
            CHECK(qc.scales[i] <= qu.scales[i] * (1.0 + 1e-12));
            CHECK(qc.scales[i] > 0.5 * qu.scales[i] * (1.0 - 1e-12));
        }
        si = e;
    }
}

TEST_CASE("constrained recipes re-derive codes instead of relabeling them") {
    const tensor x = oracle::random_tensor({4, 64}, 13);
    for (const char* text : {"fp4:e2m1:group16:m1", "fp4:e2m1:group16:m2",
                             "int4:asym:group16:m1", "int4:sym:group16:m2"}) {
        const quant_spec sc = parse_quant_spec(text);
        quant_spec su = sc;
        su.constraint = scale_constraint::none;
        const quantized_tensor qc = quantize(x, sc);
        const quantized_tensor qu = quantize(x, su);
        // relabeled = old codes read back under the new scales
        quantized_tensor relabeled = qu;
        relabeled.scales = qc.scales;
        relabeled.zero_points = qc.zero_points;
        relabeled.spec = qc.spec;
        CHECK(mse_of(x, dequantize(qc)) <= mse_of(x, dequantize(relabeled)) + 1e-15);
    }
}

TEST_CASE("input validation") {
    tensor bad(2, 2);
    bad.data[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(quantize(bad, parse_quant_spec("int8:sym:tensor")), std::domain_error);

    const tensor ok = oracle::random_tensor({2, 2}, 1);
    quantized_tensor q = quantize(ok, parse_quant_spec("int8:asym:token"));
    q.scales.pop_back();
    CHECK_THROWS_AS(dequantize(q), std::invalid_argument);
    q = quantize(ok, parse_quant_spec("int8:asym:token"));
    q.zero_points.clear();
    CHECK_THROWS_AS(dequantize(q), std::invalid_argument);
    q = quantize(ok, parse_quant_spec("int8:asym:token"));
    q.scales[0] = -1.0;
    CHECK_THROWS_AS(dequantize(q), std::invalid_argument);
}

TEST_CASE("int code helpers sign-extend") {
    CHECK(decode_int_code(encode_int_code(-8, 4), 4) == -8);
    CHECK(decode_int_code(encode_int_code(7, 4), 4) == 7);
    CHECK(decode_int_code(encode_int_code(-1, 8), 8) == -1);
    CHECK(decode_int_code(0xF8, 4) == -8);
}
