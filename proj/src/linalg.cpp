// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fpq {

tensor matmul(const tensor& a, const tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
        throw std::invalid_argument("matmul: incompatible shapes");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    tensor c(m, n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        const double* arow = a.data.data() + std::size_t(i) * k;
        double* crow = c.data.data() + std::size_t(i) * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b.data.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

tensor gram_2xtx(const tensor& x) {
    if (x.ndim() != 2) throw std::invalid_argument("gram_2xtx: 2-D input required");
    const std::size_t n = x.rows(), f = x.cols();
    tensor h(f, f);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(f); ++i) {
        for (std::size_t j = std::size_t(i); j < f; ++j) {
            double acc = 0.0;
            for (std::size_t s = 0; s < n; ++s) acc += x.data[s * f + i] * x.data[s * f + j];
            const double v = 2.0 * acc;
            h.data[std::size_t(i) * f + j] = v;
            h.data[j * f + std::size_t(i)] = v;
        }
    }
    return h;
}

double frobenius_norm(const tensor& a) {
    const std::size_t rows = a.leading(), cols = a.last_dim();
    std::vector<double> partial(rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(rows); ++r) {
        double acc = 0.0;
        const double* p = a.data.data() + std::size_t(r) * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += p[c] * p[c];
        partial[r] = acc;
    }
    double total = 0.0;
    for (double v : partial) total += v;  // fixed order: thread-count independent
    return std::sqrt(total);
}

double frobenius_diff(const tensor& a, const tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("frobenius_diff: shape mismatch");
    const std::size_t rows = a.leading(), cols = a.last_dim();
    std::vector<double> partial(rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(rows); ++r) {
        double acc = 0.0;
        const double* pa = a.data.data() + std::size_t(r) * cols;
        const double* pb = b.data.data() + std::size_t(r) * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = pa[c] - pb[c];
            acc += d * d;
        }
        partial[r] = acc;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return std::sqrt(total);
}

tensor transpose(const tensor& a) {
    if (a.ndim() != 2) throw std::invalid_argument("transpose: 2-D input required");
    const std::size_t m = a.rows(), n = a.cols();
    tensor t(n, m);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
        for (std::size_t j = 0; j < n; ++j) t.data[j * m + std::size_t(i)] = a.data[std::size_t(i) * n + j];
    return t;
}

tensor add(const tensor& a, const tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    tensor c(a.dims);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.numel()); ++i)
        c.data[i] = a.data[i] + b.data[i];
    return c;
}

tensor sub(const tensor& a, const tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
    tensor c(a.dims);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.numel()); ++i)
        c.data[i] = a.data[i] - b.data[i];
    return c;
}

}  // namespace fpq
