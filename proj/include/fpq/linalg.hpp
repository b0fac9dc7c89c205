// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fpq/tensor.hpp"

namespace fpq {

/// C = A * B for 2-D tensors; parallel over rows of C. Per-row arithmetic is
/// sequential, so results are identical for any thread count.
tensor matmul(const tensor& a, const tensor& b);

/// 2 * X^T * X for a 2-D [n_samples x features] matrix; exactly symmetric
/// (the upper triangle is computed and mirrored).
tensor gram_2xtx(const tensor& x);

/// ||A||_F. Row partials are accumulated in row order.
double frobenius_norm(const tensor& a);

/// ||(A - B)||_F.
double frobenius_diff(const tensor& a, const tensor& b);

/// A^T for a 2-D tensor.
tensor transpose(const tensor& a);

/// A + B, shapes must match.
tensor add(const tensor& a, const tensor& b);

/// A - B, shapes must match.
tensor sub(const tensor& a, const tensor& b);

}  // namespace fpq
