// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fpq/quantize.hpp"
#include "fpq/tensor.hpp"

/// Serial reference implementations of the parallel kernels. Plain
/// single-threaded scalar code, kept as the comparison baseline for tests
/// (results must match the parallel kernels bit-for-bit) and for the
/// benchmark tool.
namespace fpq::ref {

quantized_tensor quantize(const tensor& x, const quant_spec& spec);
tensor dequantize(const quantized_tensor& q);
tensor matmul(const tensor& a, const tensor& b);
tensor gram_2xtx(const tensor& x);
double frobenius_diff(const tensor& a, const tensor& b);

}  // namespace fpq::ref
