// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "fpq/minifloat.hpp"
#include "fpq/scale_cast.hpp"

namespace fpq::ref {

namespace {

int clampi(double r, int lo, int hi) {
    if (r < lo) return lo;
    if (r > hi) return hi;
    return static_cast<int>(r);
}

}  // namespace

quantized_tensor quantize(const tensor& x, const quant_spec& spec) {
    const group_geometry geo = geometry_of(spec, x.dims);
    const std::size_t ng = geo.scale_count();
    const bool affine = spec.fam == family::int_affine && !spec.symmetric;
    const int qmax_sym = (1 << (spec.bits - 1)) - 1;
    const int qmax_aff = (1 << spec.bits) - 1;
    const double fp_max = spec.fam == family::fp_scaled ? mf_max_finite(spec.format) : 0.0;

    quantized_tensor q;
    q.spec = spec;
    q.shape = x.dims;
    q.codes.assign(x.numel(), 0);
    q.scales.assign(ng, 1.0);
    if (affine) q.zero_points.assign(ng, 0);

    std::vector<double> lo(ng, 0.0), hi(ng, 0.0), amax(ng, 0.0);
    for (std::size_t g = 0; g < ng; ++g) {
        const auto [b, e] = geo.span_of(g);
        for (std::size_t i = b; i < e; ++i) {
            const double v = x.data[i];
            if (!std::isfinite(v)) throw std::domain_error("quantize: non-finite input");
            lo[g] = std::min(lo[g], v);
            hi[g] = std::max(hi[g], v);
        }
        amax[g] = std::max(hi[g], -lo[g]);
        if (amax[g] == 0.0) continue;
        if (spec.fam == family::fp_scaled) q.scales[g] = amax[g] / fp_max;
        else if (spec.symmetric) q.scales[g] = amax[g] / qmax_sym;
        else q.scales[g] = (hi[g] - lo[g]) / qmax_aff;
    }

    if (spec.constraint == scale_constraint::m1) q.scales = constrain_m1(q.scales);
    if (spec.constraint == scale_constraint::m2) q.scales = constrain_m2(q.scales, geo, spec.m2_rows);

    for (std::size_t g = 0; g < ng; ++g) {
        if (amax[g] == 0.0) continue;
        if (affine)
            q.zero_points[g] = clampi(std::nearbyint(-lo[g] / q.scales[g]), 0, qmax_aff);
        if (spec.constraint == scale_constraint::none) {
            if (spec.fam == family::fp_scaled)
                q.scales[g] = detail::stabilize_scale(q.scales[g], fp_max);
            else if (spec.symmetric)
                q.scales[g] = detail::stabilize_scale(q.scales[g], double(qmax_sym));
            else
                q.scales[g] = detail::stabilize_scale_affine(
                    q.scales[g], double(qmax_aff - q.zero_points[g]), double(-q.zero_points[g]));
        }
    }

    for (std::size_t g = 0; g < ng; ++g) {
        const auto [b, e] = geo.span_of(g);
        const double s = q.scales[g];
        if (amax[g] == 0.0) {
            const int z = affine ? q.zero_points[g] : 0;
            for (std::size_t i = b; i < e; ++i) q.codes[i] = encode_int_code(z, spec.bits);
            continue;
        }
        for (std::size_t i = b; i < e; ++i) {
            if (spec.fam == family::fp_scaled) {
                q.codes[i] = mf_encode_nearest(spec.format, x.data[i] / s);
            } else if (spec.symmetric) {
                q.codes[i] = encode_int_code(
                    clampi(std::nearbyint(x.data[i] / s), -(1 << (spec.bits - 1)), qmax_sym),
                    spec.bits);
            } else {
                q.codes[i] = encode_int_code(
                    clampi(std::nearbyint(x.data[i] / s) + q.zero_points[g], 0, qmax_aff),
                    spec.bits);
            }
        }
    }
    return q;
}

tensor dequantize(const quantized_tensor& q) {
    const group_geometry geo = geometry_of(q.spec, q.shape);
    const bool affine = q.spec.fam == family::int_affine && !q.spec.symmetric;
    tensor out(q.shape);
    for (std::size_t g = 0; g < geo.scale_count(); ++g) {
        const auto [b, e] = geo.span_of(g);
        const double s = q.scales[g];
        const int z = affine ? q.zero_points[g] : 0;
        const int mask = (1 << q.spec.bits) - 1;
        for (std::size_t i = b; i < e; ++i) {
            if (q.spec.fam == family::fp_scaled)
                out.data[i] = s * mf_decode(q.spec.format, q.codes[i]);
            else if (affine)  // affine codes are stored unsigned
                out.data[i] = s * double((q.codes[i] & mask) - z);
            else
                out.data[i] = s * double(decode_int_code(q.codes[i], q.spec.bits));
        }
    }
    return out;
}

tensor matmul(const tensor& a, const tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
        throw std::invalid_argument("matmul: incompatible shapes");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    tensor c(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.data[i * k + p];
            for (std::size_t j = 0; j < n; ++j) c.data[i * n + j] += av * b.data[p * n + j];
        }
    return c;
}

tensor gram_2xtx(const tensor& x) {
    if (x.ndim() != 2) throw std::invalid_argument("gram_2xtx: 2-D input required");
    const std::size_t n = x.rows(), f = x.cols();
    tensor h(f, f);
    for (std::size_t i = 0; i < f; ++i)
        for (std::size_t j = i; j < f; ++j) {
            double acc = 0.0;
            for (std::size_t s = 0; s < n; ++s) acc += x.data[s * f + i] * x.data[s * f + j];
            h.data[i * f + j] = 2.0 * acc;
            h.data[j * f + i] = 2.0 * acc;
        }
    return h;
}

double frobenius_diff(const tensor& a, const tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("frobenius_diff: shape mismatch");
    const std::size_t rows = a.leading(), cols = a.last_dim();
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = a.data[r * cols + c] - b.data[r * cols + c];
            acc += d * d;
        }
        total += acc;
    }
    return std::sqrt(total);
}

}  // namespace fpq::ref
