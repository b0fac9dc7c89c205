// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "fpq/quantize.hpp"

namespace fpq {

/// True iff x is +-2^k (frexp significand exactly 0.5).
bool is_pow2(double x);

/// M1: each scale moves to the enclosing power of two, S_hat = 2^ceil(log2 S).
/// Exact powers of two map to themselves; otherwise S_hat lies in (S, 2S).
/// Computed with frexp/ldexp so results are bit-exact powers of two.
std::vector<double> constrain_m1(const std::vector<double>& scales);

/// M2: within each compute group the largest scale is preserved and every
/// other scale becomes S_hat_i = S_max / 2^ceil(log2(S_max/S_i)), the nearest
/// power-of-two division of S_max from below: S_hat_i in (S_i/2, S_i]. A
/// compute group is the block of scales covering `m2_rows` consecutive rows
/// (the trailing block may be ragged).
std::vector<double> constrain_m2(const std::vector<double>& scales, const group_geometry& geo,
                                 std::size_t m2_rows);

/// Scale index range [begin, end) of the m2 compute group containing scale
/// index si under the given geometry.
std::pair<std::size_t, std::size_t> m2_group_span(const group_geometry& geo, std::size_t m2_rows,
                                                  std::size_t si);

/// Re-derives a quantization under a scale constraint: constrains q's scales,
/// then re-encodes the codes from `target` so they are nearest-rounded for
/// the new scales (zero points are recomputed for asymmetric int). `target`
/// is the tensor the codes should represent: the original weights for RTN, a
/// solver's adjusted weights for Hessian-based pipelines.
quantized_tensor constrain_requantize(const tensor& target, const quantized_tensor& q,
                                      scale_constraint method, std::size_t m2_rows);

struct cast_result {
    quantized_tensor q;        // 8-bit fp codes
    std::size_t saturations;   // entries whose shifted value left the range
};

/// Re-encodes a constrained 4-bit fp quantization into an 8-bit format with
/// one shared scale per compute group. For M2 the shared base is the group's
/// S_max and each stored value becomes v * (S_hat_i/S_max), an exact
/// power-of-two shift; for M1 the base is 1 and each stored value becomes
/// v * S_hat_i itself. The cast is value-exact (dequantization unchanged
/// bit-for-bit) whenever the shifted exponent stays inside the target
/// format's range; entries that leave it saturate and are counted.
cast_result cast_group_to_fp8(const quantized_tensor& q4,
                              const minifloat_format& target = minifloat_format::e5m2());

}  // namespace fpq
