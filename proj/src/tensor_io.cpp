// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "the container code assumes a little-endian host");

namespace fpq {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// crc32 and code packing

std::uint32_t crc32(const void* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> pack_codes(const std::vector<std::uint8_t>& codes, int bits) {
    if (bits != 4 && bits != 8) throw std::invalid_argument("pack_codes: bits must be 4 or 8");
    if (bits == 8) return codes;
    std::vector<std::uint8_t> out((codes.size() + 1) / 2, 0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::uint8_t nib = codes[i] & 0x0Fu;
        if (i % 2 == 0) out[i / 2] = nib;
        else out[i / 2] |= std::uint8_t(nib << 4);
    }
    return out;
}

std::vector<std::uint8_t> unpack_codes(const std::vector<std::uint8_t>& packed,
                                       std::size_t count, int bits) {
    if (bits != 4 && bits != 8) throw std::invalid_argument("unpack_codes: bits must be 4 or 8");
    if (bits == 8) {
        if (packed.size() != count) throw format_error("code payload size mismatch");
        return packed;
    }
    if (packed.size() != (count + 1) / 2) throw format_error("code payload size mismatch");
    std::vector<std::uint8_t> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = (i % 2 == 0) ? (packed[i / 2] & 0x0Fu) : std::uint8_t(packed[i / 2] >> 4);
    return out;
}

// ---------------------------------------------------------------------------
// buffer helpers

namespace {

constexpr std::size_t max_ndim = 8;

struct writer {
    std::vector<std::uint8_t> buf;

    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u8(std::uint8_t v) { buf.push_back(v); }
    void u16(std::uint16_t v) { bytes(&v, 2); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }

    void prefix(file_dtype dtype, std::uint8_t ndim) {
        bytes(tensor_magic, 8);
        u16(tensor_format_version);
        u8(static_cast<std::uint8_t>(dtype));
        u8(ndim);
    }
    void finish(const std::string& path) {
        u32(crc32(buf.data(), buf.size()));
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open '" + path + "' for writing");
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
        if (!out) throw io_error("write failed for '" + path + "'");
    }
};

struct reader {
    std::vector<std::uint8_t> buf;
    std::size_t pos = 0;

    explicit reader(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open '" + path + "' for reading");
        std::ostringstream ss;
        ss << in.rdbuf();
        if (in.bad()) throw io_error("read failed for '" + path + "'");
        const std::string& s = ss.str();
        buf.assign(s.begin(), s.end());
    }

    const std::uint8_t* take(std::size_t n) {
        if (buf.size() - pos < n) throw format_error("truncated file");
        const std::uint8_t* p = buf.data() + pos;
        pos += n;
        return p;
    }
    std::uint8_t u8() { return *take(1); }
    std::uint16_t u16() {
        std::uint16_t v;
        std::memcpy(&v, take(2), 2);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        std::memcpy(&v, take(8), 8);
        return v;
    }
    double f64() {
        double v;
        std::memcpy(&v, take(8), 8);
        return v;
    }

    /// Validates magic/version/checksum and returns the payload kind.
    file_dtype open_container() {
        if (buf.size() < 16) throw format_error("file too small for the container header");
        if (std::memcmp(buf.data(), tensor_magic, 8) != 0)
            throw format_error("bad magic: not a tensor container");
        std::uint32_t stored;
        std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
        if (crc32(buf.data(), buf.size() - 4) != stored)
            throw checksum_error("checksum mismatch: file is corrupted");
        buf.resize(buf.size() - 4);  // trailer consumed
        pos = 8;
        const std::uint16_t version = u16();
        if (version != tensor_format_version)
            throw format_error("unsupported container version " + std::to_string(version));
        const std::uint8_t dt = u8();
        if (dt > static_cast<std::uint8_t>(file_dtype::lorc))
            throw format_error("unknown payload kind " + std::to_string(dt));
        return static_cast<file_dtype>(dt);
    }

    std::vector<std::size_t> dims(std::uint8_t ndim) {
        if (ndim == 0 || ndim > max_ndim) throw format_error("bad dimension count");
        std::vector<std::size_t> d(ndim);
        std::size_t total = 1;
        for (auto& v : d) {
            const std::uint64_t x = u64();
            if (x == 0) throw format_error("zero-sized dimension");
            if (total > (std::size_t(1) << 40) / x) throw format_error("dimension overflow");
            total *= std::size_t(x);
            v = std::size_t(x);
        }
        return d;
    }

    void expect_end() {
        if (pos != buf.size()) throw format_error("trailing bytes after payload");
    }
};

void write_dims(writer& w, const std::vector<std::size_t>& dims) {
    for (std::size_t d : dims) w.u64(d);
}

json spec_to_json(const quant_spec& s) {
    json j;
    j["family"] = s.fam == family::int_affine ? "int" : "fp";
    j["bits"] = s.bits;
    if (s.fam == family::int_affine) {
        j["symmetric"] = s.symmetric;
    } else {
        j["format"] = {{"exp", s.format.exp_bits},
                       {"mant", s.format.mant_bits},
                       {"bias", s.format.bias},
                       {"nan_policy", s.format.nans == nan_policy::none ? "none" : "reserve_max_code"},
                       {"subnormals", s.format.subnormals}};
    }
    switch (s.gran) {
        case granularity::per_tensor: j["granularity"] = "tensor"; break;
        case granularity::per_token: j["granularity"] = "token"; break;
        case granularity::per_group:
            j["granularity"] = "group";
            j["group_size"] = s.group_size;
            break;
    }
    switch (s.constraint) {
        case scale_constraint::none: j["constraint"] = "none"; break;
        case scale_constraint::m1: j["constraint"] = "m1"; break;
        case scale_constraint::m2:
            j["constraint"] = "m2";
            j["m2_rows"] = s.m2_rows;
            break;
    }
    return j;
}

quant_spec spec_from_json(const json& j) {
    quant_spec s;
    const std::string fam = j.at("family").get<std::string>();
    s.bits = j.at("bits").get<int>();
    if (fam == "int") {
        s.fam = family::int_affine;
        s.symmetric = j.at("symmetric").get<bool>();
    } else if (fam == "fp") {
        s.fam = family::fp_scaled;
        const json& f = j.at("format");
        s.format.exp_bits = f.at("exp").get<int>();
        s.format.mant_bits = f.at("mant").get<int>();
        s.format.bias = f.at("bias").get<int>();
        const std::string np = f.at("nan_policy").get<std::string>();
        if (np == "none") s.format.nans = nan_policy::none;
        else if (np == "reserve_max_code") s.format.nans = nan_policy::reserve_max_code;
        else throw format_error("unknown nan policy '" + np + "'");
        s.format.subnormals = f.at("subnormals").get<bool>();
    } else {
        throw format_error("unknown family '" + fam + "'");
    }
    const std::string g = j.at("granularity").get<std::string>();
    if (g == "tensor") {
        s.gran = granularity::per_tensor;
    } else if (g == "token") {
        s.gran = granularity::per_token;
    } else if (g == "group") {
        s.gran = granularity::per_group;
        s.group_size = j.at("group_size").get<std::size_t>();
    } else {
        throw format_error("unknown granularity '" + g + "'");
    }
    const std::string c = j.at("constraint").get<std::string>();
    if (c == "none") {
        s.constraint = scale_constraint::none;
    } else if (c == "m1") {
        s.constraint = scale_constraint::m1;
    } else if (c == "m2") {
        s.constraint = scale_constraint::m2;
        s.m2_rows = j.at("m2_rows").get<std::size_t>();
    } else {
        throw format_error("unknown constraint '" + c + "'");
    }
    return s;
}

void write_json_block(writer& w, const json& j) {
    const std::string text = j.dump();
    w.u64(text.size());
    w.bytes(text.data(), text.size());
}

json read_json_block(reader& r) {
    const std::uint64_t len = r.u64();
    if (len > (1u << 30)) throw format_error("header block too large");
    const std::uint8_t* p = r.take(std::size_t(len));
    json j = json::parse(p, p + len, nullptr, false);
    if (j.is_discarded()) throw format_error("malformed header JSON");
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// plain tensors

void write_tensor(const std::string& path, const tensor& t, bool as_real32) {
    if (t.ndim() == 0 || t.ndim() > max_ndim)
        throw std::invalid_argument("write_tensor: 1 to 8 dimensions supported");
    writer w;
    w.prefix(as_real32 ? file_dtype::real32 : file_dtype::real64, std::uint8_t(t.ndim()));
    write_dims(w, t.dims);
    if (as_real32) {
        for (double v : t.data) {
            const float f = float(v);
            w.bytes(&f, 4);
        }
    } else {
        for (double v : t.data) w.f64(v);
    }
    w.finish(path);
}

tensor read_tensor(const std::string& path) {
    reader r(path);
    const file_dtype dt = r.open_container();
    if (dt != file_dtype::real64 && dt != file_dtype::real32)
        throw format_error("file does not hold a plain tensor");
    r.pos = 11;
    const std::uint8_t ndim = r.u8();
    tensor t(r.dims(ndim));
    if (dt == file_dtype::real64) {
        for (auto& v : t.data) v = r.f64();
    } else {
        for (auto& v : t.data) {
            float f;
            std::memcpy(&f, r.take(4), 4);
            v = double(f);
        }
    }
    r.expect_end();
    return t;
}

// ---------------------------------------------------------------------------
// standalone code arrays

void write_codes(const std::string& path, const code_array& c) {
    if (c.dims.empty() || c.dims.size() > max_ndim)
        throw std::invalid_argument("write_codes: 1 to 8 dimensions supported");
    if (tensor::numel_of(c.dims) != c.codes.size())
        throw std::invalid_argument("write_codes: dims do not match code count");
    writer w;
    w.prefix(file_dtype::packed_codes, std::uint8_t(c.dims.size()));
    w.u8(std::uint8_t(c.bits));
    write_dims(w, c.dims);
    const auto packed = pack_codes(c.codes, c.bits);
    w.bytes(packed.data(), packed.size());
    w.finish(path);
}

code_array read_codes(const std::string& path) {
    reader r(path);
    if (r.open_container() != file_dtype::packed_codes)
        throw format_error("file does not hold a code array");
    r.pos = 11;
    const std::uint8_t ndim = r.u8();
    code_array c;
    c.bits = r.u8();
    if (c.bits != 4 && c.bits != 8) throw format_error("bad code width");
    c.dims = r.dims(ndim);
    const std::size_t count = tensor::numel_of(c.dims);
    const std::size_t payload = c.bits == 8 ? count : (count + 1) / 2;
    const std::uint8_t* p = r.take(payload);
    c.codes = unpack_codes(std::vector<std::uint8_t>(p, p + payload), count, c.bits);
    r.expect_end();
    return c;
}

// ---------------------------------------------------------------------------
// quantized bundles

void write_quantized(const std::string& path, const quantized_tensor& q) {
    const group_geometry geo = geometry_of(q.spec, q.shape);  // validates the recipe
    if (q.codes.size() != geo.rows * geo.cols)
        throw std::invalid_argument("write_quantized: code count does not match shape");
    if (q.scales.size() != geo.scale_count())
        throw std::invalid_argument("write_quantized: scale count does not match geometry");

    json j = spec_to_json(q.spec);
    j["shape"] = q.shape;
    j["scales"] = q.scales;
    if (!q.zero_points.empty()) j["zero_points"] = q.zero_points;

    writer w;
    w.prefix(file_dtype::quantized, 0);
    write_json_block(w, j);
    const auto packed = pack_codes(q.codes, q.spec.bits);
    w.bytes(packed.data(), packed.size());
    w.finish(path);
}

quantized_tensor read_quantized(const std::string& path) {
    reader r(path);
    if (r.open_container() != file_dtype::quantized)
        throw format_error("file does not hold a quantized tensor");
    r.pos = 12;
    const json j = read_json_block(r);

    quantized_tensor q;
    try {
        q.spec = spec_from_json(j);
        q.shape = j.at("shape").get<std::vector<std::size_t>>();
        q.scales = j.at("scales").get<std::vector<double>>();
        if (j.contains("zero_points"))
            q.zero_points = j.at("zero_points").get<std::vector<std::int32_t>>();
    } catch (const json::exception& e) {
        throw format_error(std::string("malformed quantized header: ") + e.what());
    }

    group_geometry geo;
    try {
        geo = geometry_of(q.spec, q.shape);
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("invalid recipe in header: ") + e.what());
    }
    if (q.scales.size() != geo.scale_count())
        throw format_error("scale count does not match geometry");
    const bool affine = q.spec.fam == family::int_affine && !q.spec.symmetric;
    if (affine != !q.zero_points.empty()) throw format_error("zero-point presence mismatch");
    if (affine && q.zero_points.size() != geo.scale_count())
        throw format_error("zero-point count does not match geometry");

    const std::size_t count = geo.rows * geo.cols;
    const std::size_t payload = q.spec.bits == 8 ? count : (count + 1) / 2;
    const std::uint8_t* p = r.take(payload);
    q.codes = unpack_codes(std::vector<std::uint8_t>(p, p + payload), count, q.spec.bits);
    r.expect_end();
    return q;
}

// ---------------------------------------------------------------------------
// low-rank factor bundles

void write_lorc(const std::string& path, const lorc_factors& f) {
    std::size_t m = 0, n = 0;
    if (f.rank > 0) {
        if (f.left.ndim() != 2 || f.right.ndim() != 2 || f.left.cols() != f.rank ||
            f.right.rows() != f.rank)
            throw std::invalid_argument("write_lorc: factor shapes do not match the rank");
        m = f.left.rows();
        n = f.right.cols();
    }
    json j = {{"rank", f.rank}, {"rows", m}, {"cols", n}, {"captured_energy", f.captured_energy}};
    writer w;
    w.prefix(file_dtype::lorc, 0);
    write_json_block(w, j);
    if (f.rank > 0) {
        for (double v : f.left.data) w.f64(v);
        for (double v : f.right.data) w.f64(v);
    }
    w.finish(path);
}

lorc_factors read_lorc(const std::string& path) {
    reader r(path);
    if (r.open_container() != file_dtype::lorc)
        throw format_error("file does not hold low-rank factors");
    r.pos = 12;
    const json j = read_json_block(r);

    lorc_factors f;
    std::size_t m = 0, n = 0;
    try {
        f.rank = j.at("rank").get<std::size_t>();
        m = j.at("rows").get<std::size_t>();
        n = j.at("cols").get<std::size_t>();
        f.captured_energy = j.at("captured_energy").get<double>();
    } catch (const json::exception& e) {
        throw format_error(std::string("malformed factor header: ") + e.what());
    }
    if (f.rank > 0) {
        if (m == 0 || n == 0 || f.rank > std::min(m, n)) throw format_error("bad factor shape");
        f.left = tensor(m, f.rank);
        f.right = tensor(f.rank, n);
        for (auto& v : f.left.data) v = r.f64();
        for (auto& v : f.right.data) v = r.f64();
    }
    r.expect_end();
    return f;
}

// ---------------------------------------------------------------------------
// csv

void write_csv(const std::string& path, const tensor& t) {
    if (t.ndim() != 2) throw std::invalid_argument("write_csv: 2-D tensor required");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    char cell[40];
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            std::snprintf(cell, sizeof cell, "%.17g", t.at(r, c));
            if (c) out << ',';
            out << cell;
        }
        out << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

tensor read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        std::size_t row_cols = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t next = line.find(',', pos);
            const std::string cell = line.substr(pos, next == std::string::npos ? next : next - pos);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (...) {
                throw format_error("bad numeric cell '" + cell + "'");
            }
            while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\r')) ++used;
            if (used != cell.size()) throw format_error("bad numeric cell '" + cell + "'");
            values.push_back(v);
            ++row_cols;
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (rows == 0) cols = row_cols;
        else if (row_cols != cols) throw format_error("ragged csv rows");
        ++rows;
    }
    if (in.bad()) throw io_error("read failed for '" + path + "'");
    if (rows == 0) throw format_error("empty csv file");
    tensor t(rows, cols);
    t.data = std::move(values);
    return t;
}

// ---------------------------------------------------------------------------
// extension dispatch

namespace {

bool has_suffix(const std::string& path, const char* ext) {
    const std::size_t n = std::strlen(ext);
    return path.size() >= n && path.compare(path.size() - n, n, ext) == 0;
}

}  // namespace

void write_tensor_auto(const std::string& path, const tensor& t) {
    if (has_suffix(path, ".csv")) write_csv(path, t);
    else write_tensor(path, t);
}

tensor read_tensor_auto(const std::string& path) {
    if (has_suffix(path, ".csv")) return read_csv(path);
    return read_tensor(path);
}

}  // namespace fpq
