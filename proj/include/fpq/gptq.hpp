// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fpq/quantize.hpp"
#include "fpq/tensor.hpp"

namespace fpq {

/// Raised when a computation is well-formed but numerically infeasible
/// (e.g. a Hessian that is not positive definite at the chosen damping).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Preprocessed second-order calibration state for one linear layer.
struct hessian_state {
    std::size_t features = 0;
    tensor hinv_upper;               ///< upper Cholesky factor U of (H + lambda*I)^-1, [f x f]
    std::vector<std::uint8_t> dead;  ///< columns whose raw diagonal was exactly zero
    double lambda = 0.0;             ///< applied damping
    double diag_mean = 0.0;          ///< mean of diag(2 X^T X) before damping
};

/// Builds H = 2 X^T X from calibration activations X [samples x features],
/// adds lambda = damping_fraction * mean(diag H) to the diagonal, inverts,
/// and takes the upper Cholesky factor of the inverse. Columns with a raw
/// zero diagonal (features never activated) are marked dead. Throws
/// numerical_error when the damped matrix cannot be factorized or the
/// factor is non-finite; std::invalid_argument on bad arguments.
hessian_state build_hessian(const tensor& x, double damping_fraction = 0.01);

struct solve_options {
    std::size_t block_size = 128;  ///< columns per lazy-batch block
    bool sequential = false;       ///< propagate each column's error immediately
                                   ///< to every later column (reference mode)
};

struct solve_result {
    quantized_tensor q;  ///< solver codes under the requested recipe
    tensor adjusted;     ///< per-column quantization targets after propagation;
                         ///< column j holds the value its codes were rounded from
};

/// Error-compensating quantization: columns are quantized left to right and
/// each column's rounding error, weighted by the inverse-Hessian row, is
/// subtracted from the columns that follow. Group scales are frozen when the
/// solver enters the group, from the adjusted values at that moment. Dead
/// columns quantize round-to-nearest with no propagation. Blocked and
/// sequential modes produce identical codes; blocking only batches the
/// cross-block rank-1 updates. Recipes with a scale constraint run two
/// sweeps: the first derives the grid unconstrained, then the scales are
/// constrained (zero points re-derived for asymmetric int) and a second
/// sweep re-solves the whole matrix against the fixed constrained grid, so
/// error propagation compensates the coarser grid.
solve_result gptq_quantize(const tensor& w, const hessian_state& h, const quant_spec& spec,
                           const solve_options& opts = {});

/// Plain round-to-nearest under the same recipe (the comparison baseline).
quantized_tensor rtn_baseline(const tensor& w, const quant_spec& spec);

/// ||(W - What) X^T||_F: reconstruction error propagated through the
/// calibration activations.
double proxy_loss(const tensor& w, const tensor& w_hat, const tensor& x);

}  // namespace fpq
