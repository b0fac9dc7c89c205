// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fpq/scale_cast.hpp"

namespace fpq {

// ---------------------------------------------------------------------------
// spec strings

namespace {

std::vector<std::string> split_colon(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = text.find(':', pos);
        if (next == std::string::npos) {
            out.push_back(text.substr(pos));
            return out;
        }
        out.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
}

std::size_t parse_count(const std::string& text, const char* what) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (...) {
        throw std::invalid_argument(std::string("quant spec: bad ") + what + " '" + text + "'");
    }
    if (pos != text.size() || v == 0)
        throw std::invalid_argument(std::string("quant spec: bad ") + what + " '" + text + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace

quant_spec parse_quant_spec(const std::string& text) {
    const auto toks = split_colon(text);
    if (toks.size() < 3)
        throw std::invalid_argument("quant spec '" + text +
                                    "': expected family:mode:granularity[:constraint]");
    quant_spec s;
    const std::string& fam = toks[0];
    if (fam == "int4" || fam == "int8") {
        s.fam = family::int_affine;
        s.bits = fam == "int4" ? 4 : 8;
        if (toks[1] == "sym") s.symmetric = true;
        else if (toks[1] == "asym") s.symmetric = false;
        else throw std::invalid_argument("quant spec '" + text + "': int mode must be sym or asym");
    } else if (fam == "fp4" || fam == "fp8") {
        s.fam = family::fp_scaled;
        s.bits = fam == "fp4" ? 4 : 8;
        s.format = minifloat_format::named(toks[1]);
        if (s.format.total_bits() != s.bits)
            throw std::invalid_argument("quant spec '" + text + "': format " + toks[1] +
                                        " is not " + std::to_string(s.bits) + "-bit");
    } else {
        throw std::invalid_argument("quant spec '" + text + "': family must be int4/int8/fp4/fp8");
    }

    const std::string& g = toks[2];
    if (g == "tensor") {
        s.gran = granularity::per_tensor;
    } else if (g == "token") {
        s.gran = granularity::per_token;
    } else if (g.rfind("group", 0) == 0) {
        s.gran = granularity::per_group;
        s.group_size = parse_count(g.substr(5), "group size");
    } else {
        throw std::invalid_argument("quant spec '" + text + "': granularity must be tensor/token/group<N>");
    }

    std::size_t i = 3;
    if (i < toks.size() && (toks[i] == "m1" || toks[i] == "m2")) {
        if (toks[i] == "m1") {
            s.constraint = scale_constraint::m1;
            ++i;
        } else {
            s.constraint = scale_constraint::m2;
            ++i;
            if (i < toks.size()) {
                s.m2_rows = parse_count(toks[i], "m2 row count");
                ++i;
            }
        }
    }
    if (i != toks.size())
        throw std::invalid_argument("quant spec '" + text + "': trailing tokens");
    return s;
}

std::string to_string(const quant_spec& s) {
    std::string out;
    if (s.fam == family::int_affine) {
        out = "int" + std::to_string(s.bits) + (s.symmetric ? ":sym" : ":asym");
    } else {
        out = "fp" + std::to_string(s.bits) + ":" + s.format.name();
    }
    switch (s.gran) {
        case granularity::per_tensor: out += ":tensor"; break;
        case granularity::per_token: out += ":token"; break;
        case granularity::per_group: out += ":group" + std::to_string(s.group_size); break;
    }
    if (s.constraint == scale_constraint::m1) out += ":m1";
    if (s.constraint == scale_constraint::m2) {
        out += ":m2";
        if (s.m2_rows != 1) out += ":" + std::to_string(s.m2_rows);
    }
    return out;
}

void validate_spec(const quant_spec& s, const std::vector<std::size_t>& shape) {
    if (s.bits != 4 && s.bits != 8) throw std::invalid_argument("quant spec: bits must be 4 or 8");
    if (s.fam == family::fp_scaled) {
        mf_validate(s.format);
        if (s.format.total_bits() != s.bits)
            throw std::invalid_argument("quant spec: format width does not match bits");
    }
    if (s.gran == granularity::per_group && s.group_size == 0)
        throw std::invalid_argument("quant spec: group granularity needs a group size");
    if (s.gran == granularity::per_token && shape.size() != 2)
        throw std::invalid_argument("quant spec: per-token granularity requires a 2-D tensor");
    if (s.m2_rows == 0) throw std::invalid_argument("quant spec: m2 row count must be positive");
    if (shape.empty()) throw std::invalid_argument("quant spec: empty shape");
}

// ---------------------------------------------------------------------------
// geometry

group_geometry geometry_of(const quant_spec& spec, const std::vector<std::size_t>& shape) {
    validate_spec(spec, shape);
    group_geometry g;
    g.gran = spec.gran;
    g.cols = shape.back();
    g.rows = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) g.rows *= shape[i];
    g.group_size = spec.group_size;
    if (spec.gran == granularity::per_group)
        g.groups_per_row = (g.cols + g.group_size - 1) / g.group_size;
    return g;
}

std::size_t group_geometry::scale_count() const {
    switch (gran) {
        case granularity::per_tensor: return 1;
        case granularity::per_token: return rows;
        case granularity::per_group: return rows * groups_per_row;
    }
    return 1;
}

std::size_t group_geometry::scale_of(std::size_t flat) const {
    switch (gran) {
        case granularity::per_tensor: return 0;
        case granularity::per_token: return flat / cols;
        case granularity::per_group:
            return (flat / cols) * groups_per_row + (flat % cols) / group_size;
    }
    return 0;
}

std::pair<std::size_t, std::size_t> group_geometry::span_of(std::size_t si) const {
    switch (gran) {
        case granularity::per_tensor: return {0, rows * cols};
        case granularity::per_token: return {si * cols, (si + 1) * cols};
        case granularity::per_group: {
            const std::size_t r = si / groups_per_row;
            const std::size_t gcol = (si % groups_per_row) * group_size;
            const std::size_t begin = r * cols + gcol;
            return {begin, begin + std::min(group_size, cols - gcol)};
        }
    }
    return {0, rows * cols};
}

// ---------------------------------------------------------------------------
// int code helpers

int decode_int_code(std::uint8_t raw, int bits) {
    int v = raw & ((1 << bits) - 1);
    if (v & (1 << (bits - 1))) v -= 1 << bits;
    return v;
}

std::uint8_t encode_int_code(int value, int bits) {
    return static_cast<std::uint8_t>(value & ((1 << bits) - 1));
}

// ---------------------------------------------------------------------------
// scale stabilization
//
// dequantize emits fl(S*d); requantization recovers its scale from those
// products. Stored scales are therefore fixed points of the recovery map, so
// quantize(dequantize(quantize(x))) reproduces codes and scales bit-exactly.
// The maps are nondecreasing in s and within a few ulp of the identity, so
// iteration terminates.

namespace detail {

double stabilize_scale(double s, double qmax) {
    for (int i = 0; i < 64; ++i) {
        const double t = (s * qmax) / qmax;
        if (t == s) return s;
        s = t;
    }
    throw std::runtime_error("quantize: scale stabilization did not converge");
}

double stabilize_scale_affine(double s, double span_hi, double span_lo) {
    // recovery map of an affine grid: range = fl(S*hi) - fl(S*lo), S = range/span
    const double span = span_hi - span_lo;
    for (int i = 0; i < 64; ++i) {
        const double t = ((s * span_hi) - (s * span_lo)) / span;
        if (t == s) return s;
        s = t;
    }
    throw std::runtime_error("quantize: scale stabilization did not converge");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// quantize

namespace {

struct group_stats {
    double lo = 0.0;     // min(x, 0)
    double hi = 0.0;     // max(x, 0)
    double amax = 0.0;   // max |x|
};

group_stats scan_group(const double* x, std::size_t n) {
    group_stats st;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i];
        if (!std::isfinite(v)) throw std::domain_error("quantize: non-finite input");
        st.lo = std::min(st.lo, v);
        st.hi = std::max(st.hi, v);
    }
    st.amax = std::max(st.hi, -st.lo);
    return st;
}

int clamp_int(double r, int lo, int hi) {
    if (r < lo) return lo;
    if (r > hi) return hi;
    return static_cast<int>(r);
}

}  // namespace

namespace detail {

derived_scale derive_group_scale(const double* x, std::size_t n, const quant_spec& spec) {
    const group_stats st = scan_group(x, n);
    derived_scale d;
    d.lo = st.lo;
    if (st.amax == 0.0) {  // all-zero group: S = 1, codes = Z
        d.degenerate = true;
        return d;
    }
    const int qmax_sym = (1 << (spec.bits - 1)) - 1;
    const int qmax_aff = (1 << spec.bits) - 1;
    if (spec.fam == family::fp_scaled) {
        const double fp_max = mf_max_finite(spec.format);
        d.scale = stabilize_scale(st.amax / fp_max, fp_max);
    } else if (spec.symmetric) {
        d.scale = stabilize_scale(st.amax / qmax_sym, double(qmax_sym));
    } else {
        const double raw = (st.hi - st.lo) / qmax_aff;
        d.zero_point = clamp_int(std::nearbyint(-st.lo / raw), 0, qmax_aff);
        d.scale = stabilize_scale_affine(raw, double(qmax_aff - d.zero_point),
                                         double(-d.zero_point));
    }
    return d;
}

}  // namespace detail

quantized_tensor quantize(const tensor& x, const quant_spec& spec) {
    const group_geometry geo = geometry_of(spec, x.dims);
    const std::size_t ng = geo.scale_count();

    // validated before the parallel passes: an exception cannot leave an
    // OpenMP region
    bool finite = true;
    const std::int64_t sn = static_cast<std::int64_t>(x.numel());
#pragma omp parallel for schedule(static) reduction(&& : finite)
    for (std::int64_t i = 0; i < sn; ++i)
        finite = finite && std::isfinite(x.data[static_cast<std::size_t>(i)]);
    if (!finite) throw std::domain_error("quantize: non-finite input");

    quantized_tensor q;
    q.spec = spec;
    q.shape = x.dims;
    q.codes.assign(x.numel(), 0);
    q.scales.assign(ng, 1.0);
    const bool affine = spec.fam == family::int_affine && !spec.symmetric;
    if (affine) q.zero_points.assign(ng, 0);

    const int qmax_sym = (1 << (spec.bits - 1)) - 1;
    const int qmax_aff = (1 << spec.bits) - 1;
    std::vector<char> degenerate(ng, 0);
    const std::int64_t sng = static_cast<std::int64_t>(ng);

    if (spec.constraint == scale_constraint::none) {
#pragma omp parallel for schedule(static)
        for (std::int64_t g = 0; g < sng; ++g) {
            const auto [b, e] = geo.span_of(static_cast<std::size_t>(g));
            const auto d = detail::derive_group_scale(x.data.data() + b, e - b, spec);
            q.scales[g] = d.scale;
            if (affine) q.zero_points[g] = d.zero_point;
            degenerate[g] = d.degenerate ? 1 : 0;
        }
    } else {
        // pass A: group ranges
        std::vector<group_stats> stats(ng);
#pragma omp parallel for schedule(static)
        for (std::int64_t g = 0; g < sng; ++g) {
            const auto [b, e] = geo.span_of(static_cast<std::size_t>(g));
            stats[g] = scan_group(x.data.data() + b, e - b);
        }

        // pass B: raw scales, constrain, then zero points on the final grid
        const double fp_max = spec.fam == family::fp_scaled ? mf_max_finite(spec.format) : 0.0;
        for (std::size_t g = 0; g < ng; ++g) {
            const group_stats& st = stats[g];
            if (st.amax == 0.0) {  // all-zero group: S = 1, codes = Z
                degenerate[g] = 1;
                continue;
            }
            if (spec.fam == family::fp_scaled) {
                q.scales[g] = st.amax / fp_max;
            } else if (spec.symmetric) {
                q.scales[g] = st.amax / qmax_sym;
            } else {
                q.scales[g] = (st.hi - st.lo) / qmax_aff;
            }
        }
        q.scales = spec.constraint == scale_constraint::m1
                       ? constrain_m1(q.scales)
                       : constrain_m2(q.scales, geo, spec.m2_rows);
        if (affine) {
            for (std::size_t g = 0; g < ng; ++g) {
                if (degenerate[g]) continue;
                const double z = std::nearbyint(-stats[g].lo / q.scales[g]);
                q.zero_points[g] = clamp_int(z, 0, qmax_aff);
            }
        }
    }

    // pass C: codes
#pragma omp parallel for schedule(static)
    for (std::int64_t g = 0; g < sng; ++g) {
        const auto [b, e] = geo.span_of(static_cast<std::size_t>(g));
        const double s = q.scales[g];
        if (degenerate[g]) {
            const int z = affine ? q.zero_points[g] : 0;
            for (std::size_t i = b; i < e; ++i)
                q.codes[i] = encode_int_code(z, spec.bits);  // fp zero code is 0 too
            continue;
        }
        if (spec.fam == family::fp_scaled) {
            for (std::size_t i = b; i < e; ++i)
                q.codes[i] = mf_encode_nearest(spec.format, x.data[i] / s);
        } else if (spec.symmetric) {
            const int lo = -(1 << (spec.bits - 1));
            for (std::size_t i = b; i < e; ++i) {
                const int v = clamp_int(std::nearbyint(x.data[i] / s), lo, qmax_sym);
                q.codes[i] = encode_int_code(v, spec.bits);
            }
        } else {
            const int z = q.zero_points[g];
            for (std::size_t i = b; i < e; ++i) {
                const int v = clamp_int(std::nearbyint(x.data[i] / s) + z, 0, qmax_aff);
                q.codes[i] = encode_int_code(v, spec.bits);
            }
        }
    }
    return q;
}

tensor dequantize(const quantized_tensor& q) {
    const group_geometry geo = geometry_of(q.spec, q.shape);
    const std::size_t ng = geo.scale_count();
    if (q.scales.size() != ng)
        throw std::invalid_argument("dequantize: scale count does not match geometry");
    const bool affine = q.spec.fam == family::int_affine && !q.spec.symmetric;
    if (affine && q.zero_points.size() != ng)
        throw std::invalid_argument("dequantize: zero-point count does not match geometry");
    if (q.codes.size() != geo.rows * geo.cols)
        throw std::invalid_argument("dequantize: code count does not match shape");
    for (double s : q.scales)
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("dequantize: scales must be positive and finite");

    tensor out(q.shape);
    const std::int64_t sng = static_cast<std::int64_t>(ng);
#pragma omp parallel for schedule(static)
    for (std::int64_t g = 0; g < sng; ++g) {
        const auto [b, e] = geo.span_of(static_cast<std::size_t>(g));
        const double s = q.scales[g];
        if (q.spec.fam == family::fp_scaled) {
            for (std::size_t i = b; i < e; ++i)
                out.data[i] = s * mf_decode(q.spec.format, q.codes[i]);
        } else if (affine) {
            // affine codes are stored unsigned
            const int z = q.zero_points[g];
            const int mask = (1 << q.spec.bits) - 1;
            for (std::size_t i = b; i < e; ++i)
                out.data[i] = s * double((q.codes[i] & mask) - z);
        } else {
            for (std::size_t i = b; i < e; ++i)
                out.data[i] = s * double(decode_int_code(q.codes[i], q.spec.bits));
        }
    }
    return out;
}

}  // namespace fpq
