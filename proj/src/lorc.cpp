// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/lorc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fpq/linalg.hpp"
#include "fpq/rng.hpp"

namespace fpq {

tensor error_matrix(const tensor& w, const quantized_tensor& q) {
    if (w.dims != q.shape) throw std::invalid_argument("error_matrix: shape mismatch");
    return sub(w, dequantize(q));
}

namespace {

lorc_factors factors_from_svd(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma,
                              const Eigen::MatrixXd& v, std::size_t rank, double total_energy,
                              std::size_t m, std::size_t n) {
    lorc_factors f;
    f.rank = rank;
    if (total_energy == 0.0) {
        f.captured_energy = 1.0;  // nothing to capture: a zero error is fully represented
    } else {
        double top = 0.0;
        for (std::size_t i = 0; i < rank; ++i) top += sigma(Eigen::Index(i)) * sigma(Eigen::Index(i));
        f.captured_energy = std::min(1.0, top / total_energy);
    }
    if (rank == 0) return f;

    f.left = tensor(m, rank);
    f.right = tensor(rank, n);
    for (std::size_t k = 0; k < rank; ++k) {
        const double root = std::sqrt(sigma(Eigen::Index(k)));
        for (std::size_t i = 0; i < m; ++i)
            f.left.data[i * rank + k] = u(Eigen::Index(i), Eigen::Index(k)) * root;
        for (std::size_t j = 0; j < n; ++j)
            f.right.data[k * n + j] = root * v(Eigen::Index(j), Eigen::Index(k));
    }
    return f;
}

}  // namespace

lorc_factors lorc_factorize(const tensor& e, std::size_t rank, const lorc_options& opts) {
    if (e.ndim() != 2) throw std::invalid_argument("lorc_factorize: 2-D error matrix required");
    const std::size_t m = e.rows(), n = e.cols();
    const std::size_t rmax = std::min(m, n);
    if (rank > rmax)
        throw std::invalid_argument("lorc_factorize: rank exceeds min(rows, cols)");
    for (double v : e.data)
        if (!std::isfinite(v)) throw std::domain_error("lorc_factorize: non-finite input");

    const double fro = frobenius_norm(e);
    const double total_energy = fro * fro;

    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        em(e.data.data(), Eigen::Index(m), Eigen::Index(n));

    if (!opts.randomized || rank == 0) {
        const Eigen::BDCSVD<Eigen::MatrixXd> svd(em, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return factors_from_svd(svd.matrixU(), svd.singularValues(), svd.matrixV(), rank,
                                total_energy, m, n);
    }

    // subspace projection: sketch the column space, orthonormalize, then take
    // the exact SVD of the small projected matrix
    const std::size_t l = std::min(rank + opts.oversample, rmax);
    const Eigen::Index en = Eigen::Index(n), el = Eigen::Index(l);
    Eigen::MatrixXd omega(en, el);
    const counter_rng rng{counter_rng::mix(opts.seed ^ 0x4C6F5243ULL)};
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < l; ++k)
            omega(Eigen::Index(j), Eigen::Index(k)) = rng.normal_at(j * l + k);

    const Eigen::MatrixXd y = em * omega;                       // [m x l]
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    const Eigen::MatrixXd qmat =
        qr.householderQ() * Eigen::MatrixXd::Identity(Eigen::Index(m), Eigen::Index(l));
    const Eigen::MatrixXd b = qmat.transpose() * em;            // [l x n]
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd u = qmat * svd.matrixU();             // [m x l]
    return factors_from_svd(u, svd.singularValues(), svd.matrixV(), rank, total_energy, m, n);
}

tensor lorc_correction(const lorc_factors& f, std::size_t rows, std::size_t cols) {
    if (f.rank == 0) return tensor(rows, cols);
    if (f.left.ndim() != 2 || f.right.ndim() != 2 || f.left.cols() != f.rank ||
        f.right.rows() != f.rank || f.left.rows() != rows || f.right.cols() != cols)
        throw std::invalid_argument("lorc_correction: factor shapes do not match");
    return matmul(f.left, f.right);
}

tensor apply_lorc(const quantized_tensor& q, const lorc_factors& f) {
    tensor base = dequantize(q);
    if (base.ndim() != 2) throw std::invalid_argument("apply_lorc: 2-D tensor required");
    if (f.rank == 0) return base;
    return add(base, lorc_correction(f, base.rows(), base.cols()));
}

}  // namespace fpq
