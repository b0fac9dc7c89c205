// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/gptq.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fpq/linalg.hpp"
#include "fpq/scale_cast.hpp"

namespace fpq {

namespace {

int clamp_int(double r, int lo, int hi) {
    if (r < lo) return lo;
    if (r > hi) return hi;
    return static_cast<int>(r);
}

}  // namespace

hessian_state build_hessian(const tensor& x, double damping_fraction) {
    if (x.ndim() != 2) throw std::invalid_argument("build_hessian: 2-D activations required");
    if (!std::isfinite(damping_fraction) || damping_fraction < 0.0)
        throw std::invalid_argument("build_hessian: damping fraction must be finite and >= 0");

    const std::size_t f = x.cols();
    hessian_state st;
    st.features = f;
    st.dead.assign(f, 0);

    const tensor h = gram_2xtx(x);
    double dsum = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
        const double d = h.data[i * f + i];
        if (d == 0.0) st.dead[i] = 1;
        dsum += d;
    }
    st.diag_mean = dsum / double(f);
    st.lambda = damping_fraction * st.diag_mean;

    // h is exactly symmetric, so the storage-order mismatch is harmless
    Eigen::MatrixXd hd =
        Eigen::Map<const Eigen::MatrixXd>(h.data.data(), Eigen::Index(f), Eigen::Index(f));
    hd.diagonal().array() += st.lambda;

    const Eigen::LLT<Eigen::MatrixXd> llt(hd);
    if (llt.info() != Eigen::Success)
        throw numerical_error("build_hessian: matrix is not positive definite; increase damping");
    const Eigen::MatrixXd hinv =
        llt.solve(Eigen::MatrixXd::Identity(Eigen::Index(f), Eigen::Index(f)));
    const Eigen::LLT<Eigen::MatrixXd> llt_inv(hinv);
    if (llt_inv.info() != Eigen::Success)
        throw numerical_error("build_hessian: inverse factorization failed; increase damping");
    const Eigen::MatrixXd u = llt_inv.matrixU();

    st.hinv_upper = tensor(f, f);
    for (std::size_t r = 0; r < f; ++r)
        for (std::size_t c = 0; c < f; ++c) {
            const double v = u(Eigen::Index(r), Eigen::Index(c));
            if (!std::isfinite(v))
                throw numerical_error("build_hessian: non-finite Cholesky factor");
            st.hinv_upper.data[r * f + c] = v;
        }
    return st;
}

solve_result gptq_quantize(const tensor& w, const hessian_state& h, const quant_spec& spec,
                           const solve_options& opts) {
    if (w.ndim() != 2) throw std::invalid_argument("gptq_quantize: 2-D weights required");
    if (h.features != w.cols())
        throw std::invalid_argument("gptq_quantize: Hessian feature count does not match weights");
    if (opts.block_size == 0)
        throw std::invalid_argument("gptq_quantize: block size must be positive");
    for (double v : w.data)
        if (!std::isfinite(v)) throw std::domain_error("gptq_quantize: non-finite weights");

    quant_spec spec_unc = spec;
    spec_unc.constraint = scale_constraint::none;
    const group_geometry geo = geometry_of(spec_unc, w.dims);
    const std::size_t rows = geo.rows, cols = geo.cols, ng = geo.scale_count();

    solve_result res;
    res.adjusted = w;
    quantized_tensor& q = res.q;
    q.spec = spec_unc;
    q.shape = w.dims;
    q.codes.assign(w.numel(), 0);
    q.scales.assign(ng, 1.0);
    const bool affine = spec.fam == family::int_affine && !spec.symmetric;
    if (affine) q.zero_points.assign(ng, 0);
    const bool constrained = spec.constraint != scale_constraint::none;
    std::vector<double> group_lo(affine && constrained ? ng : 0, 0.0);

    const int bits = spec.bits;
    const int qmax_sym = (1 << (bits - 1)) - 1;
    const int qmin_sym = -(1 << (bits - 1));
    const int qmax_aff = (1 << bits) - 1;
    const double* u = h.hinv_upper.data.data();
    tensor& adj = res.adjusted;
    const std::int64_t srows = static_cast<std::int64_t>(rows);

    const auto record = [&](std::size_t si, const detail::derived_scale& d) {
        q.scales[si] = d.scale;
        if (affine) q.zero_points[si] = d.zero_point;
        if (!group_lo.empty()) group_lo[si] = d.lo;
    };

    // Freeze the scales of every scale group that starts at column j, from
    // the adjusted values as they stand when the solver reaches j. In blocked
    // mode, columns at or past the block end have not received the deferred
    // updates from columns b0..j-1 yet; those pending updates are folded in
    // on the fly (in the same column order the sequential mode applies them)
    // so the frozen scale does not depend on the block size.
    const auto freeze_at = [&](std::size_t j, std::size_t b0, std::size_t b1,
                               const tensor& block_err) {
        const auto derive = [&](std::size_t r, std::size_t b, std::size_t e) {
            const std::size_t ge = e - r * cols;  // group end column
            if (opts.sequential || j == b0 || ge <= b1)
                return detail::derive_group_scale(adj.data.data() + b, e - b, spec_unc);
            std::vector<double> v(adj.data.begin() + std::ptrdiff_t(b),
                                  adj.data.begin() + std::ptrdiff_t(e));
            const double* erow = block_err.data.data() + r * block_err.cols();
            const std::size_t gb = b - r * cols;  // group start column
            for (std::size_t p = std::max(gb, b1); p < ge; ++p) {
                double x = v[p - gb];
                for (std::size_t k = 0; k < j - b0; ++k) x -= erow[k] * u[(b0 + k) * cols + p];
                v[p - gb] = x;
            }
            return detail::derive_group_scale(v.data(), v.size(), spec_unc);
        };
        if (geo.gran == granularity::per_tensor) {
            if (j != 0) return;
            record(0, detail::derive_group_scale(adj.data.data(), adj.numel(), spec_unc));
            return;
        }
        if (geo.gran == granularity::per_token) {
            if (j != 0) return;
#pragma omp parallel for schedule(static)
            for (std::int64_t r = 0; r < srows; ++r) {
                const auto [b, e] = geo.span_of(std::size_t(r));
                record(std::size_t(r), derive(std::size_t(r), b, e));
            }
            return;
        }
        if (j % geo.group_size != 0) return;
        const std::size_t gidx = j / geo.group_size;
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < srows; ++r) {
            const std::size_t si = std::size_t(r) * geo.groups_per_row + gidx;
            const auto [b, e] = geo.span_of(si);
            record(si, derive(std::size_t(r), b, e));
        }
    };

    // One full error-propagating sweep against the grid held in q. When
    // derive_scales is set the grid is frozen group by group as the sweep
    // reaches it; otherwise the scales and zero points already in q are
    // taken as fixed.
    const auto sweep = [&](bool derive_scales) {
        adj = w;
        tensor block_err(rows, std::min(opts.block_size, cols));
        for (std::size_t b0 = 0; b0 < cols; b0 += opts.block_size) {
            const std::size_t b1 = std::min(b0 + opts.block_size, cols);
            for (std::size_t j = b0; j < b1; ++j) {
                if (derive_scales) freeze_at(j, b0, b1, block_err);
                const bool dead = h.dead[j] != 0;
                const double ujj = u[j * cols + j];
                const std::size_t prop_end = opts.sequential ? cols : b1;
#pragma omp parallel for schedule(static)
                for (std::int64_t r = 0; r < srows; ++r) {
                    double* row = adj.data.data() + std::size_t(r) * cols;
                    const std::size_t si = geo.scale_of(std::size_t(r) * cols + j);
                    const double s = q.scales[si];
                    const double wv = row[j];
                    double deq;
                    std::uint8_t code;
                    if (spec.fam == family::fp_scaled) {
                        code = mf_encode_nearest(spec.format, wv / s);
                        deq = s * mf_decode(spec.format, code);
                    } else if (spec.symmetric) {
                        const int v = clamp_int(std::nearbyint(wv / s), qmin_sym, qmax_sym);
                        code = encode_int_code(v, bits);
                        deq = s * double(v);
                    } else {
                        const int z = q.zero_points[si];
                        const int v = clamp_int(std::nearbyint(wv / s) + z, 0, qmax_aff);
                        code = encode_int_code(v, bits);
                        deq = s * double(v - z);
                    }
                    q.codes[std::size_t(r) * cols + j] = code;
                    const double err = dead ? 0.0 : (wv - deq) / ujj;
                    block_err.data[std::size_t(r) * block_err.cols() + (j - b0)] = err;
                    const double* urow = u + j * cols;
                    for (std::size_t p = j + 1; p < prop_end; ++p) row[p] -= err * urow[p];
                }
            }
            if (!opts.sequential && b1 < cols) {
                // deferred cross-block updates; per element the subtractions
                // run in the same column order as the sequential mode, so both
                // modes produce bit-identical adjusted values and codes
                const std::size_t bw = b1 - b0;
#pragma omp parallel for schedule(static)
                for (std::int64_t r = 0; r < srows; ++r) {
                    double* row = adj.data.data() + std::size_t(r) * cols;
                    const double* erow =
                        block_err.data.data() + std::size_t(r) * block_err.cols();
                    for (std::size_t p = b1; p < cols; ++p) {
                        double v = row[p];
                        for (std::size_t k = 0; k < bw; ++k)
                            v -= erow[k] * u[(b0 + k) * cols + p];
                        row[p] = v;
                    }
                }
            }
        }
    };

    sweep(true);

    if (constrained) {
        // Constrain the grid the first sweep settled on, then re-solve against
        // it. Because the second sweep sees the constrained scales from the
        // start, its error propagation compensates the coarser grid instead of
        // inheriting codes rounded for the unconstrained one.
        q.scales = spec.constraint == scale_constraint::m1
                       ? constrain_m1(q.scales)
                       : constrain_m2(q.scales, geo, spec.m2_rows);
        if (affine) {
            for (std::size_t g = 0; g < ng; ++g) {
                const double z = std::nearbyint(-group_lo[g] / q.scales[g]);
                q.zero_points[g] = clamp_int(z, 0, qmax_aff);
            }
        }
        q.spec = spec;
        sweep(false);
    }
    return res;
}

quantized_tensor rtn_baseline(const tensor& w, const quant_spec& spec) {
    return quantize(w, spec);
}

double proxy_loss(const tensor& w, const tensor& w_hat, const tensor& x) {
    if (w.ndim() != 2 || x.ndim() != 2 || x.cols() != w.cols())
        throw std::invalid_argument("proxy_loss: shape mismatch");
    return frobenius_norm(matmul(sub(w, w_hat), transpose(x)));
}

}  // namespace fpq
