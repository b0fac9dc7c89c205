// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fpq/quantize.hpp"
#include "fpq/tensor.hpp"

namespace fpq {

/// Low-rank factors of a reconstruction-error matrix E ~= left * right,
/// with the singular values split evenly: left = U_r sqrt(Sigma_r),
/// right = sqrt(Sigma_r) V_r^T.
struct lorc_factors {
    tensor left;    ///< [m x r]; empty when rank == 0
    tensor right;   ///< [r x n]; empty when rank == 0
    std::size_t rank = 0;
    double captured_energy = 0.0;  ///< sum of top-r sigma^2 over ||E||_F^2, in [0, 1];
                                   ///< defined as 1 when E is exactly zero
};

/// E = W - dequantize(q), the error a low-rank correction should absorb.
tensor error_matrix(const tensor& w, const quantized_tensor& q);

struct lorc_options {
    bool randomized = false;       ///< subspace-projection sketch instead of a dense SVD
    std::size_t oversample = 8;    ///< extra sketch columns beyond the target rank
    std::uint64_t seed = 7;        ///< sketch RNG seed
};

/// Best rank-r factorization of a 2-D error matrix in the Frobenius sense.
/// rank may be 0 (empty factors) up to min(m, n); larger values throw
/// std::invalid_argument. The dense path computes a full SVD; the randomized
/// path sketches E with a Gaussian projection, orthonormalizes, and solves
/// the small SVD, trading exactness for speed on large matrices.
lorc_factors lorc_factorize(const tensor& e, std::size_t rank, const lorc_options& opts = {});

/// dequantize(q) + left * right: the corrected reconstruction.
tensor apply_lorc(const quantized_tensor& q, const lorc_factors& f);

/// left * right alone, shaped like the error matrix (zero for rank 0; the
/// shape argument supplies the result shape in that case).
tensor lorc_correction(const lorc_factors& f, std::size_t rows, std::size_t cols);

}  // namespace fpq
