// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fpq/quantize.hpp"
#include "fpq/tensor.hpp"

namespace fpq {

/// Distribution summary computed with exact two-pass population moments.
struct distribution_report {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double stddev = 0.0;            ///< population standard deviation
    double skewness = 0.0;          ///< 0 when stddev is 0
    double excess_kurtosis = 0.0;   ///< 0 when stddev is 0
    std::size_t outlier_count = 0;  ///< entries > 6 std devs from the rest (leave-one-out)
    double hist_lo = 0.0;           ///< left edge of bin 0 (== min)
    double hist_width = 0.0;        ///< bin width; 0 for a constant tensor
    std::vector<std::uint64_t> histogram;  ///< equal-width bins over [min, max];
                                           ///< max falls in the last bin; a constant
                                           ///< tensor puts every entry in bin 0
};

/// Summarize a tensor. Throws std::domain_error on non-finite entries and
/// std::invalid_argument when bins < 1. Serial by design: the fold order is
/// pinned so results are identical on every run.
distribution_report summarize(const tensor& t, int bins = 100);

/// Synthetic data kinds used to exercise quantizers.
enum class synth_kind {
    normal,            ///< iid standard normal
    outlier_injected,  ///< normal with a fraction of entries replaced by +-magnitude
    relu_skewed,       ///< max(0, normal): half zeros, positive tail
};

synth_kind synth_kind_from_name(std::string_view name);  // throws std::invalid_argument
const char* synth_kind_name(synth_kind kind);

struct synth_options {
    double outlier_rate = 0.01;      ///< fraction of entries replaced (at least one)
    double outlier_magnitude = 6.0;  ///< replaced entries become +-magnitude
};

/// Generate synthetic data. Counter-based RNG: the result is a pure function
/// of (kind, dims, seed, options), bit-identical across runs and thread counts.
tensor gen_synthetic(synth_kind kind, const std::vector<std::size_t>& dims,
                     std::uint64_t seed, const synth_options& opts = {});

/// A tiny hand-picked vector: a cluster of small values 0.1 .. 1.4 plus a
/// single 100.0 outlier. Useful for showing how one extreme value stretches
/// an integer grid while exponent-based formats keep the cluster resolved.
tensor outlier_demo_vector();

/// Reconstruction error of a quantized tensor against its source.
struct error_report {
    double mse = 0.0;
    double max_abs_err = 0.0;
    double sqnr_db = 0.0;    ///< 10*log10(mean(w^2)/mse); +inf when mse == 0
    double proxy_loss = 0.0; ///< ||(W - What) X^T||_F; NaN when no calibration given
    std::vector<double> per_group_mse;  ///< one entry per scale group
};

/// Compare w against dequantize(q). Optional calibration activations X
/// (rows = samples, cols = w.cols()) enable the proxy loss term.
error_report reconstruction_error(const tensor& w, const quantized_tensor& q,
                                  const tensor* calib = nullptr);

/// Same report given an explicit reconstruction (already dequantized).
error_report reconstruction_error_dense(const tensor& w, const tensor& w_hat,
                                        const group_geometry& geo,
                                        const tensor* calib = nullptr);

}  // namespace fpq
