// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace fpq {

/// Dense row-major tensor of doubles. Doubles are the working precision for
/// every real-valued operation in the library; narrower storage types exist
/// only inside the file format.
struct tensor {
    std::vector<std::size_t> dims;
    std::vector<double> data;

    tensor() = default;
    explicit tensor(std::vector<std::size_t> d) : dims(std::move(d)) {
        data.assign(numel_of(dims), 0.0);
    }
    tensor(std::size_t rows, std::size_t cols) : tensor(std::vector<std::size_t>{rows, cols}) {}

    static std::size_t numel_of(const std::vector<std::size_t>& d) {
        std::size_t n = 1;
        for (std::size_t x : d) {
            if (x == 0) throw std::invalid_argument("tensor: zero-sized dimension");
            if (n > (std::size_t(1) << 40) / x) throw std::invalid_argument("tensor: dimension overflow");
            n *= x;
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t ndim() const { return dims.size(); }

    // Trailing axis is the quantization axis; all leading axes are flattened
    // into "rows" so an [out x in] weight matrix groups along input channels.
    std::size_t last_dim() const { return dims.empty() ? 1 : dims.back(); }
    std::size_t leading() const { return dims.empty() ? 1 : numel() / last_dim(); }

    std::size_t rows() const {
        if (dims.size() != 2) throw std::invalid_argument("tensor: rows() requires 2-D");
        return dims[0];
    }
    std::size_t cols() const {
        if (dims.size() != 2) throw std::invalid_argument("tensor: cols() requires 2-D");
        return dims[1];
    }

    double& at(std::size_t r, std::size_t c) { return data[r * last_dim() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * last_dim() + c]; }

    bool same_shape(const tensor& o) const { return dims == o.dims; }
};

}  // namespace fpq
