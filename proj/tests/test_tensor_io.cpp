// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fpq/linalg.hpp"
#include "fpq/tensor_io.hpp"
#include "oracles.hpp"

using namespace fpq;

namespace {

struct temp_dir {
    std::filesystem::path path;
    temp_dir() {
        path = std::filesystem::temp_directory_path() /
               ("fpq_io_test_" + std::to_string(std::uintptr_t(this)));
        std::filesystem::create_directories(path);
    }
    ~temp_dir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

// rewrites the trailing CRC so structural corruption survives the checksum
void refresh_crc(std::vector<std::uint8_t>& bytes) {
    const std::uint32_t c = crc32(bytes.data(), bytes.size() - 4);
    for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + std::size_t(i)] =
        std::uint8_t((c >> (8 * i)) & 0xFF);
}

}  // namespace

TEST_CASE("crc32 matches the published check value") {
    const char* s = "123456789";
    CHECK(crc32(s, 9) == 0xCBF43926u);
    CHECK(crc32(s, 0) == 0u);
}

TEST_CASE("4-bit packing pairs codes low nibble first and pads odd tails") {
    const std::vector<std::uint8_t> codes = {0xA, 0xB, 0xC};
    const std::vector<std::uint8_t> packed = pack_codes(codes, 4);
    CHECK(packed == std::vector<std::uint8_t>{0xBA, 0x0C});
    CHECK(unpack_codes(packed, 3, 4) == codes);

    const std::vector<std::uint8_t> even = {0x1, 0x2, 0x3, 0x4};
    CHECK(pack_codes(even, 4) == std::vector<std::uint8_t>{0x21, 0x43});
    CHECK(unpack_codes(pack_codes(even, 4), 4, 4) == even);

    const std::vector<std::uint8_t> bytes = {0xAB, 0xCD};
    CHECK(pack_codes(bytes, 8) == bytes);
    CHECK(unpack_codes(bytes, 2, 8) == bytes);
}

TEST_CASE("float64 tensors round trip bit for bit") {
    temp_dir d;
    tensor t = oracle::random_tensor({3, 4, 5}, 1);
    t.data[0] = 0.0;
    t.data[1] = -0.0;
    t.data[2] = 1e-300;
    t.data[3] = -1e300;
    write_tensor(d.file("t.bin"), t);
    const tensor r = read_tensor(d.file("t.bin"));
    CHECK(r.dims == t.dims);
    CHECK(r.data == t.data);

    // writing the same content twice produces identical bytes
    write_tensor(d.file("t2.bin"), r);
    CHECK(slurp(d.file("t.bin")) == slurp(d.file("t2.bin")));
}

TEST_CASE("float32 storage narrows on write and widens losslessly on read") {
    temp_dir d;
    const tensor t = oracle::random_tensor({7}, 2);
    write_tensor(d.file("t.bin"), t, true);
    const tensor r = read_tensor(d.file("t.bin"));
    for (std::size_t i = 0; i < 7; ++i) CHECK(r.data[i] == double(float(t.data[i])));
}

TEST_CASE("code arrays round trip including ragged 4-bit payloads") {
    temp_dir d;
    for (const std::size_t n : {1u, 2u, 15u, 16u, 255u}) {
        code_array c;
        c.dims = {n};
        c.bits = 4;
        const fpq::counter_rng rng{n};
        for (std::size_t i = 0; i < n; ++i)
            c.codes.push_back(std::uint8_t(rng.bits_at(i) & 0xF));
        write_codes(d.file("c.bin"), c);
        const code_array r = read_codes(d.file("c.bin"));
        CHECK(r.dims == c.dims);
        CHECK(r.bits == 4);
        CHECK(r.codes == c.codes);
    }
}

TEST_CASE("quantized tensors round trip across recipes") {
    temp_dir d;
    const tensor w = oracle::random_tensor({6, 9}, 3);
    for (const char* text : {"int8:sym:tensor", "int8:asym:token", "int4:asym:group4",
                             "fp4:e2m1:group4", "fp8:e4m3:token", "fp4:e2m1:group4:m2",
                             "int4:sym:group5:m1"}) {
        const quantized_tensor q = quantize(w, parse_quant_spec(text));
        write_quantized(d.file("q.bin"), q);
        const quantized_tensor r = read_quantized(d.file("q.bin"));
        CHECK(r.spec == q.spec);
        CHECK(r.shape == q.shape);
        CHECK(r.codes == q.codes);
        CHECK(r.scales == q.scales);
        CHECK(r.zero_points == q.zero_points);
        CHECK(frobenius_diff(dequantize(r), dequantize(q)) == 0.0);
    }
}

TEST_CASE("low-rank factors round trip, including the empty rank-0 pair") {
    temp_dir d;
    lorc_factors f;
    f.rank = 2;
    f.left = oracle::random_tensor({5, 2}, 4);
    f.right = oracle::random_tensor({2, 7}, 5);
    f.captured_energy = 0.625;
    write_lorc(d.file("f.bin"), f);
    const lorc_factors r = read_lorc(d.file("f.bin"));
    CHECK(r.rank == 2);
    CHECK(r.left.dims == f.left.dims);
    CHECK(r.left.data == f.left.data);
    CHECK(r.right.data == f.right.data);
    CHECK(r.captured_energy == 0.625);

    lorc_factors z;
    z.rank = 0;
    z.captured_energy = 1.0;
    write_lorc(d.file("z.bin"), z);
    const lorc_factors rz = read_lorc(d.file("z.bin"));
    CHECK(rz.rank == 0);
    CHECK(rz.left.numel() == 0);
    CHECK(rz.captured_energy == 1.0);
}

TEST_CASE("a flipped payload byte is rejected by the checksum") {
    temp_dir d;
    const tensor t = oracle::random_tensor({11}, 6);
    write_tensor(d.file("t.bin"), t);
    auto bytes = slurp(d.file("t.bin"));
    bytes[20] ^= 0x40;
    spit(d.file("bad.bin"), bytes);
    CHECK_THROWS_AS(read_tensor(d.file("bad.bin")), checksum_error);
}

TEST_CASE("structural damage with a valid checksum is a format error") {
    temp_dir d;
    const tensor t = oracle::random_tensor({11}, 7);
    write_tensor(d.file("t.bin"), t);
    const auto good = slurp(d.file("t.bin"));

    auto bad_magic = good;
    bad_magic[0] = 'X';
    refresh_crc(bad_magic);
    spit(d.file("m.bin"), bad_magic);
    CHECK_THROWS_AS(read_tensor(d.file("m.bin")), format_error);

    auto bad_version = good;
    bad_version[8] = 9;
    refresh_crc(bad_version);
    spit(d.file("v.bin"), bad_version);
    CHECK_THROWS_AS(read_tensor(d.file("v.bin")), format_error);

    auto bad_dtype = good;
    bad_dtype[10] = 200;
    refresh_crc(bad_dtype);
    spit(d.file("d.bin"), bad_dtype);
    CHECK_THROWS_AS(read_tensor(d.file("d.bin")), format_error);

    auto truncated = good;
    truncated.resize(8);
    spit(d.file("short.bin"), truncated);
    CHECK_THROWS_AS(read_tensor(d.file("short.bin")), format_error);

    CHECK_THROWS_AS(read_tensor(d.file("missing.bin")), io_error);
}

TEST_CASE("csv matrices round trip at full precision") {
    temp_dir d;
    tensor t = oracle::random_tensor({4, 3}, 8);
    t.data[0] = 1.0 / 3.0;
    t.data[1] = -1e-17;
    write_csv(d.file("t.csv"), t);
    const tensor r = read_csv(d.file("t.csv"));
    CHECK(r.dims == t.dims);
    CHECK(r.data == t.data);
}

TEST_CASE("malformed csv inputs are format errors") {
    temp_dir d;
    std::ofstream(d.file("jagged.csv")) << "1,2,3\n4,5\n";
    CHECK_THROWS_AS(read_csv(d.file("jagged.csv")), format_error);
    std::ofstream(d.file("word.csv")) << "1,banana\n";
    CHECK_THROWS_AS(read_csv(d.file("word.csv")), format_error);
    std::ofstream(d.file("empty.csv")) << "";
    CHECK_THROWS_AS(read_csv(d.file("empty.csv")), format_error);
}

TEST_CASE("auto dispatch picks text for .csv and the container otherwise") {
    temp_dir d;
    const tensor t = oracle::random_tensor({2, 2}, 9);
    write_tensor_auto(d.file("a.csv"), t);
    write_tensor_auto(d.file("a.bin"), t);
    const auto csv = slurp(d.file("a.csv"));
    const auto bin = slurp(d.file("a.bin"));
    CHECK(std::string(bin.begin(), bin.begin() + 7) == "FPQTENS");
    CHECK(std::string(csv.begin(), csv.end()).find("FPQTENS") == std::string::npos);
    CHECK(read_tensor_auto(d.file("a.csv")).data == t.data);
    CHECK(read_tensor_auto(d.file("a.bin")).data == t.data);
}
