// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpq/minifloat.hpp"
#include "fpq/tensor.hpp"

namespace fpq {

enum class family : std::uint8_t { int_affine = 0, fp_scaled = 1 };
enum class granularity : std::uint8_t { per_tensor = 0, per_group = 1, per_token = 2 };
enum class scale_constraint : std::uint8_t { none = 0, m1 = 1, m2 = 2 };

/// A complete quantization recipe. Expressible as a config string:
///   int{4,8}:{sym,asym}:{tensor,group<N>,token}[:m1|:m2[<rows>]]
///   fp{4,8}:<format>:{tensor,group<N>,token}[:m1|:m2[<rows>]]
/// e.g. "int8:asym:token", "fp4:e2m1:group256:m2". No defaults for family,
/// signedness or format: recipes are explicit.
struct quant_spec {
    family fam = family::int_affine;
    int bits = 8;
    bool symmetric = true;               // int family only
    minifloat_format format;             // fp family only
    granularity gran = granularity::per_tensor;
    std::size_t group_size = 0;          // per_group only
    scale_constraint constraint = scale_constraint::none;
    std::size_t m2_rows = 1;             // scale rows per m2 compute group

    bool operator==(const quant_spec&) const = default;
};

quant_spec parse_quant_spec(const std::string& text);  // throws std::invalid_argument
std::string to_string(const quant_spec& spec);

/// Throws std::invalid_argument on contradictory settings (fp bits not
/// matching the format width, group granularity without a size, ...).
void validate_spec(const quant_spec& spec, const std::vector<std::size_t>& shape);

/// Maps flat element indices to scale indices. Groups run along the trailing
/// axis (the input-channel axis of an [out x in] weight matrix); the last
/// group of a row may be ragged. Tokens are rows of a 2-D tensor.
struct group_geometry {
    granularity gran = granularity::per_tensor;
    std::size_t rows = 1;            // flattened leading dims
    std::size_t cols = 1;            // trailing axis
    std::size_t group_size = 0;      // per_group only
    std::size_t groups_per_row = 1;

    std::size_t scale_count() const;
    std::size_t scale_of(std::size_t flat_index) const;
    /// Flat element range [begin, end) covered by one scale. Every
    /// granularity is contiguous in row-major order.
    std::pair<std::size_t, std::size_t> span_of(std::size_t scale_index) const;
};

group_geometry geometry_of(const quant_spec& spec, const std::vector<std::size_t>& shape);

/// Codes plus everything needed to reconstruct. One byte per element holding
/// the right-aligned code: two's complement in `bits` for symmetric int,
/// unsigned for asymmetric int, minifloat bit pattern for fp. Scales are one
/// per group (see group_geometry); zero_points parallel the scales for
/// asymmetric int and are empty otherwise.
struct quantized_tensor {
    quant_spec spec;
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> codes;
    std::vector<double> scales;
    std::vector<std::int32_t> zero_points;

    group_geometry geometry() const { return geometry_of(spec, shape); }
};

/// Sign-extends a stored symmetric-int code to its integer value.
int decode_int_code(std::uint8_t raw, int bits);
std::uint8_t encode_int_code(int value, int bits);

/// Round-to-nearest quantization under the recipe. Scales derive from each
/// group: symmetric int S = max|x|/(2^(bits-1)-1) with Z = 0; asymmetric int
/// S = (max-min)/(2^bits-1) over a range widened to include 0 with
/// Z = round(-min/S); fp S = max|x|/max_finite(format). An all-zero group
/// gets S = 1 and codes = Z. Stored scales are fixed points of the
/// dequantize->requantize map so a second quantize reproduces codes and
/// scales exactly. M1/M2 recipes quantize with the constrained scales
/// (see scale_cast.hpp). Throws std::domain_error on non-finite input.
quantized_tensor quantize(const tensor& x, const quant_spec& spec);

/// S*(code - Z) for int, S*decode(code) for fp. Throws std::invalid_argument
/// when scales/zero_points do not match the geometry.
tensor dequantize(const quantized_tensor& q);

namespace detail {
/// Fixed point of s -> fl(fl(s*q1)/q1) (+ the zero-point split for asym int),
/// reached by monotone iteration; keeps requantization scale-stable.
double stabilize_scale(double s, double qmax);
double stabilize_scale_affine(double s, double span_hi, double span_lo);

struct derived_scale {
    double scale = 1.0;
    std::int32_t zero_point = 0;
    double lo = 0.0;          // min(x, 0) of the group, for re-deriving zero
                              // points after a scale constraint
    bool degenerate = false;  // all-zero group
};

/// Scale derivation for one group under an unconstrained recipe, identical
/// to quantize() with constraint none (stabilization included). Solvers that
/// freeze scales mid-run call this so their grids match plain quantization.
derived_scale derive_group_scale(const double* x, std::size_t n, const quant_spec& spec);
}  // namespace detail

}  // namespace fpq
