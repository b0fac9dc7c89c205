// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpq/lorc.hpp"
#include "fpq/quantize.hpp"
#include "fpq/tensor.hpp"

namespace fpq {

/// I/O failure talking to the filesystem (open/read/write).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally invalid file: bad magic, unsupported version, malformed
/// header, inconsistent sizes.
struct format_error : io_error {
    using io_error::io_error;
};

/// The payload does not match its checksum (bit rot, truncation, tampering).
struct checksum_error : io_error {
    using io_error::io_error;
};

/// Binary container layout (all integers little-endian):
///   bytes 0..7   magic "FPQTENS\0"
///   bytes 8..9   format version, currently 1
///   byte  10     payload kind (file_dtype)
///   byte  11     ndim for plain arrays, 0 for structured payloads
///   ...          kind-specific body (see docs/FORMAT.md)
///   last 4       CRC-32 of every preceding byte
enum class file_dtype : std::uint8_t {
    real64 = 0,        ///< ndim, dims, float64 payload
    real32 = 1,        ///< ndim, dims, float32 payload (widened to double on read)
    packed_codes = 2,  ///< ndim, bits byte, dims, packed code payload
    quantized = 3,     ///< JSON header + packed codes
    lorc = 4,          ///< JSON header + left/right float64 payloads
};

inline constexpr char tensor_magic[8] = {'F', 'P', 'Q', 'T', 'E', 'N', 'S', '\0'};
inline constexpr std::uint16_t tensor_format_version = 1;

/// CRC-32 (reflected, polynomial 0xEDB88320) of a byte range.
std::uint32_t crc32(const void* data, std::size_t len);

/// Packs one-byte-per-element codes for storage: 8-bit codes pass through,
/// 4-bit codes pair two per byte with the earlier element in the low nibble
/// and a zero nibble padding an odd tail.
std::vector<std::uint8_t> pack_codes(const std::vector<std::uint8_t>& codes, int bits);
std::vector<std::uint8_t> unpack_codes(const std::vector<std::uint8_t>& packed,
                                       std::size_t count, int bits);

void write_tensor(const std::string& path, const tensor& t, bool as_real32 = false);
tensor read_tensor(const std::string& path);

/// Standalone packed code array with shape, for code tensors that travel
/// without their scales.
struct code_array {
    std::vector<std::size_t> dims;
    std::vector<std::uint8_t> codes;  // one byte per element
    int bits = 8;
};
void write_codes(const std::string& path, const code_array& c);
code_array read_codes(const std::string& path);

void write_quantized(const std::string& path, const quantized_tensor& q);
quantized_tensor read_quantized(const std::string& path);

void write_lorc(const std::string& path, const lorc_factors& f);
lorc_factors read_lorc(const std::string& path);

/// Plain-text matrix interop: one row per line, comma-separated, full
/// round-trip precision.
void write_csv(const std::string& path, const tensor& t);
tensor read_csv(const std::string& path);

/// Dispatch on extension: ".csv" is text, everything else is the binary
/// container.
void write_tensor_auto(const std::string& path, const tensor& t);
tensor read_tensor_auto(const std::string& path);

}  // namespace fpq
