// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "fpq/linalg.hpp"
#include "fpq/rng.hpp"

namespace fpq {

distribution_report summarize(const tensor& t, int bins) {
    if (bins < 1) throw std::invalid_argument("summarize: bins must be positive");
    const std::size_t n = t.numel();
    if (n == 0) throw std::invalid_argument("summarize: empty tensor");

    distribution_report r;
    r.count = n;
    r.min = t.data[0];
    r.max = t.data[0];
    double sum = 0.0;
    for (double v : t.data) {
        if (!std::isfinite(v)) throw std::domain_error("summarize: non-finite input");
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
        sum += v;
    }
    r.mean = sum / double(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : t.data) {
        const double d = v - r.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double var = m2 / double(n);
    r.stddev = std::sqrt(var);
    if (r.stddev > 0.0) {
        r.skewness = (m3 / double(n)) / (r.stddev * r.stddev * r.stddev);
        r.excess_kurtosis = (m4 / double(n)) / (var * var) - 3.0;
    }

    r.hist_lo = r.min;
    r.hist_width = (r.max - r.min) / double(bins);
    r.histogram.assign(std::size_t(bins), 0);
    // An entry is an outlier when it sits more than 6 standard deviations from
    // the center of the REMAINING entries. Judging each entry against statistics
    // that exclude it keeps a single extreme value from masking itself by
    // inflating the pooled deviation. Both leave-one-out moments follow in O(1)
    // from the full-sample mean and centered second moment:
    //   |v - mean_loo|  = |d| * n/(n-1)            with d = v - mean
    //   var_loo         = (m2 - d^2 * n/(n-1)) / (n-1)
    const double ratio = n > 1 ? double(n) / double(n - 1) : 0.0;
    for (double v : t.data) {
        std::size_t b = 0;
        if (r.hist_width > 0.0) {
            b = std::min(std::size_t((v - r.min) / r.hist_width), std::size_t(bins - 1));
        }
        ++r.histogram[b];
        if (n > 1) {
            const double d = v - r.mean;
            const double dev_loo = std::fabs(d) * ratio;
            const double var_loo = std::max(0.0, (m2 - d * d * ratio) / double(n - 1));
            if (dev_loo > 6.0 * std::sqrt(var_loo)) ++r.outlier_count;
        }
    }
    return r;
}

synth_kind synth_kind_from_name(std::string_view name) {
    if (name == "normal") return synth_kind::normal;
    if (name == "outlier_injected") return synth_kind::outlier_injected;
    if (name == "relu_skewed") return synth_kind::relu_skewed;
    throw std::invalid_argument("unknown synthetic kind '" + std::string(name) + "'");
}

const char* synth_kind_name(synth_kind kind) {
    switch (kind) {
        case synth_kind::normal: return "normal";
        case synth_kind::outlier_injected: return "outlier_injected";
        case synth_kind::relu_skewed: return "relu_skewed";
    }
    return "normal";
}

tensor gen_synthetic(synth_kind kind, const std::vector<std::size_t>& dims, std::uint64_t seed,
                     const synth_options& opts) {
    tensor t(dims);
    const std::size_t n = t.numel();
    const counter_rng rng{counter_rng::mix(seed ^ (0x5F514B494E44ULL + std::uint64_t(kind)))};

    const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        const double z = rng.normal_at(std::uint64_t(i));
        t.data[i] = kind == synth_kind::relu_skewed ? std::max(0.0, z) : z;
    }

    if (kind == synth_kind::outlier_injected) {
        if (!(opts.outlier_rate >= 0.0 && opts.outlier_rate <= 1.0))
            throw std::invalid_argument("gen_synthetic: outlier rate must be in [0, 1]");
        const std::size_t want =
            std::max<std::size_t>(1, std::size_t(std::nearbyint(opts.outlier_rate * double(n))));
        const std::size_t k = std::min(want, n);
        // distinct positions from a dedicated stream; serial, k is small
        const counter_rng pos_rng{counter_rng::mix(rng.seed + 0x9E37)};
        std::unordered_set<std::size_t> taken;
        std::uint64_t idx = 0;
        while (taken.size() < k) {
            const std::size_t p = std::size_t(pos_rng.bits_at(idx) % n);
            if (taken.insert(p).second) {
                const bool neg = (pos_rng.bits_at(idx) >> 63) & 1;
                t.data[p] = neg ? -opts.outlier_magnitude : opts.outlier_magnitude;
            }
            ++idx;
        }
    }
    return t;
}

tensor outlier_demo_vector() {
    tensor t(std::vector<std::size_t>{15});
    for (int i = 0; i < 14; ++i) t.data[std::size_t(i)] = 0.1 * double(i + 1);
    t.data[14] = 100.0;
    return t;
}

error_report reconstruction_error_dense(const tensor& w, const tensor& w_hat,
                                        const group_geometry& geo, const tensor* calib) {
    if (!w.same_shape(w_hat))
        throw std::invalid_argument("reconstruction_error: shape mismatch");
    const std::size_t n = w.numel();

    error_report r;
    double se = 0.0, signal = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = w.data[i] - w_hat.data[i];
        se += d * d;
        signal += w.data[i] * w.data[i];
        r.max_abs_err = std::max(r.max_abs_err, std::fabs(d));
    }
    r.mse = se / double(n);
    r.sqnr_db = r.mse == 0.0 ? std::numeric_limits<double>::infinity()
                             : 10.0 * std::log10((signal / double(n)) / r.mse);

    const std::size_t ng = geo.scale_count();
    r.per_group_mse.assign(ng, 0.0);
    for (std::size_t g = 0; g < ng; ++g) {
        const auto [b, e] = geo.span_of(g);
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            const double d = w.data[i] - w_hat.data[i];
            acc += d * d;
        }
        r.per_group_mse[g] = acc / double(e - b);
    }

    if (calib) {
        if (calib->ndim() != 2 || w.ndim() != 2 || calib->cols() != w.cols())
            throw std::invalid_argument("reconstruction_error: calibration shape mismatch");
        r.proxy_loss = frobenius_norm(matmul(sub(w, w_hat), transpose(*calib)));
    } else {
        r.proxy_loss = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

error_report reconstruction_error(const tensor& w, const quantized_tensor& q,
                                  const tensor* calib) {
    return reconstruction_error_dense(w, dequantize(q), q.geometry(), calib);
}

}  // namespace fpq
