// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/scale_cast.hpp"

#include <cmath>
#include <stdexcept>

namespace fpq {

bool is_pow2(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) return false;
    int e;
    return std::frexp(x, &e) == 0.5;
}

std::vector<double> constrain_m1(const std::vector<double>& scales) {
    std::vector<double> out(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const double s = scales[i];
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("constrain_m1: scales must be positive and finite");
        int e;
        const double f = std::frexp(s, &e);  // s = f * 2^e, f in [0.5, 1)
        out[i] = f == 0.5 ? s : std::ldexp(1.0, e);
    }
    return out;
}

std::pair<std::size_t, std::size_t> m2_group_span(const group_geometry& geo, std::size_t m2_rows,
                                                  std::size_t si) {
    if (m2_rows == 0) throw std::invalid_argument("m2: row count must be positive");
    // scales per row of the weight matrix; per_tensor has a single global group
    std::size_t per_row;
    switch (geo.gran) {
        case granularity::per_tensor: return {0, 1};
        case granularity::per_token: per_row = 1; break;
        case granularity::per_group: per_row = geo.groups_per_row; break;
        default: return {0, 1};
    }
    const std::size_t block = per_row * m2_rows;
    const std::size_t total = geo.scale_count();
    const std::size_t begin = (si / block) * block;
    return {begin, std::min(begin + block, total)};
}

std::vector<double> constrain_m2(const std::vector<double>& scales, const group_geometry& geo,
                                 std::size_t m2_rows) {
    for (double s : scales)
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("constrain_m2: scales must be positive and finite");
    std::vector<double> out(scales.size());
    std::size_t i = 0;
    while (i < scales.size()) {
        const auto [b, e] = m2_group_span(geo, m2_rows, i);
        double s_max = 0.0;
        for (std::size_t j = b; j < e; ++j) s_max = std::max(s_max, scales[j]);
        for (std::size_t j = b; j < e; ++j) {
            // smallest k >= 0 with S_max / 2^k <= S_j, i.e. k = ceil(log2(S_max/S_j))
            int ex;
            const double f = std::frexp(s_max / scales[j], &ex);
            int k = f == 0.5 ? ex - 1 : ex;
            if (k < 0) k = 0;
            while (std::ldexp(s_max, -k) > scales[j]) ++k;                // fl division edge
            while (k > 0 && std::ldexp(s_max, -(k - 1)) <= scales[j]) --k;
            out[j] = std::ldexp(s_max, -k);
        }
        i = e;
    }
    return out;
}

quantized_tensor constrain_requantize(const tensor& target, const quantized_tensor& q,
                                      scale_constraint method, std::size_t m2_rows) {
    if (method == scale_constraint::none)
        throw std::invalid_argument("constrain_requantize: no constraint requested");
    if (target.dims != q.shape)
        throw std::invalid_argument("constrain_requantize: target shape mismatch");
    const group_geometry geo = q.geometry();
    if (q.scales.size() != geo.scale_count())
        throw std::invalid_argument("constrain_requantize: scale count mismatch");

    quantized_tensor out = q;
    out.spec.constraint = method;
    out.spec.m2_rows = m2_rows;
    out.scales = method == scale_constraint::m1 ? constrain_m1(q.scales)
                                                : constrain_m2(q.scales, geo, m2_rows);

    const bool affine = q.spec.fam == family::int_affine && !q.spec.symmetric;
    const int qmax_sym = (1 << (q.spec.bits - 1)) - 1;
    const int qmax_aff = (1 << q.spec.bits) - 1;
    const std::int64_t ng = static_cast<std::int64_t>(geo.scale_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t g = 0; g < ng; ++g) {
        const auto [b, e] = geo.span_of(static_cast<std::size_t>(g));
        const double s = out.scales[g];
        if (affine) {
            // keep the frozen grid offset: Z' * S_hat tracks Z * S
            const double z = std::nearbyint(double(q.zero_points[g]) * q.scales[g] / s);
            out.zero_points[g] = z < 0 ? 0 : (z > qmax_aff ? qmax_aff : int(z));
        }
        if (q.spec.fam == family::fp_scaled) {
            for (std::size_t i = b; i < e; ++i)
                out.codes[i] = mf_encode_nearest(q.spec.format, target.data[i] / s);
        } else if (q.spec.symmetric) {
            const int lo = -(1 << (q.spec.bits - 1));
            for (std::size_t i = b; i < e; ++i) {
                double r = std::nearbyint(target.data[i] / s);
                const int v = r < lo ? lo : (r > qmax_sym ? qmax_sym : int(r));
                out.codes[i] = encode_int_code(v, q.spec.bits);
            }
        } else {
            const int z = out.zero_points[g];
            for (std::size_t i = b; i < e; ++i) {
                double r = std::nearbyint(target.data[i] / s) + z;
                const int v = r < 0 ? 0 : (r > qmax_aff ? qmax_aff : int(r));
                out.codes[i] = encode_int_code(v, q.spec.bits);
            }
        }
    }
    return out;
}

cast_result cast_group_to_fp8(const quantized_tensor& q4, const minifloat_format& target) {
    mf_validate(target);
    if (target.total_bits() != 8)
        throw std::invalid_argument("cast_group_to_fp8: target must be an 8-bit format");
    if (q4.spec.fam != family::fp_scaled || q4.spec.bits != 4)
        throw std::invalid_argument("cast_group_to_fp8: input must be a 4-bit fp quantization");
    if (q4.spec.constraint == scale_constraint::none)
        throw std::invalid_argument("cast_group_to_fp8: input scales must be M1- or M2-constrained");
    const group_geometry geo = q4.geometry();
    if (q4.scales.size() != geo.scale_count())
        throw std::invalid_argument("cast_group_to_fp8: scale count mismatch");

    const bool m2 = q4.spec.constraint == scale_constraint::m2;

    // per-scale shift factor and shared base
    std::vector<double> ratio(q4.scales.size());
    std::vector<double> base(q4.scales.size());
    for (std::size_t i = 0; i < q4.scales.size();) {
        if (m2) {
            const auto [b, e] = m2_group_span(geo, q4.spec.m2_rows, i);
            double s_max = 0.0;
            for (std::size_t j = b; j < e; ++j) s_max = std::max(s_max, q4.scales[j]);
            for (std::size_t j = b; j < e; ++j) {
                ratio[j] = q4.scales[j] / s_max;  // exact: scales are pow2 divisions of s_max
                base[j] = s_max;
                if (!is_pow2(ratio[j]))
                    throw std::invalid_argument("cast_group_to_fp8: scale ratios are not powers of two");
            }
            i = e;
        } else {
            if (!is_pow2(q4.scales[i]))
                throw std::invalid_argument("cast_group_to_fp8: M1 scales must be powers of two");
            ratio[i] = q4.scales[i];
            base[i] = 1.0;
            ++i;
        }
    }

    cast_result res;
    res.q.spec = q4.spec;
    res.q.spec.fam = family::fp_scaled;
    res.q.spec.bits = 8;
    res.q.spec.format = target;
    res.q.spec.constraint = scale_constraint::none;
    res.q.shape = q4.shape;
    res.q.scales.resize(q4.scales.size());
    res.q.codes.assign(q4.codes.size(), 0);
    res.saturations = 0;

    const std::int64_t ng = static_cast<std::int64_t>(geo.scale_count());
    std::size_t sat_total = 0;
#pragma omp parallel for schedule(static) reduction(+ : sat_total)
    for (std::int64_t g = 0; g < ng; ++g) {
        const auto [b, e] = geo.span_of(static_cast<std::size_t>(g));
        res.q.scales[g] = base[g];
        for (std::size_t i = b; i < e; ++i) {
            const double v = mf_decode(q4.spec.format, q4.codes[i]);
            const double t = v * ratio[g];  // exact power-of-two shift
            const std::uint8_t code = mf_encode_nearest(target, t);
            res.q.codes[i] = code;
            if (mf_decode(target, code) != t) ++sat_total;
        }
    }
    res.saturations = sat_total;
    return res;
}

}  // namespace fpq
