#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

#include "wbe/core/tensor.hpp"

namespace wbe {

// WBT1 tensor container, little-endian throughout:
//   bytes 0..3   magic "WBT1"
//   u32          version (1)
//   u32          dtype: 1 = f64, 2 = complex128 (interleaved re,im)
//   u32          ndim
//   ndim x u64   dims
//   payload      row-major scalars
//
// Per-axis dimensions above 2^32 are rejected on both paths.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(char((v >> (8 * k)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(char((v >> (8 * k)) & 0xFF));
}

inline void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct ByteReader {
    const unsigned char* p;
    std::size_t n, pos = 0;

    bool take(void* dst, std::size_t k) {
        if (pos + k > n) return false;
        std::memcpy(dst, p + pos, k);
        pos += k;
        return true;
    }

    bool u32(std::uint32_t& v) {
        unsigned char b[4];
        if (!take(b, 4)) return false;
        v = 0;
        for (int k = 3; k >= 0; --k) v = (v << 8) | b[k];
        return true;
    }

    bool u64(std::uint64_t& v) {
        unsigned char b[8];
        if (!take(b, 8)) return false;
        v = 0;
        for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
        return true;
    }

    bool f64(double& d) {
        std::uint64_t v;
        if (!u64(v)) return false;
        d = std::bit_cast<double>(v);
        return true;
    }
};

} // namespace detail

inline void write_tensor(const std::string& path, const Tensor& t) {
    std::string buf;
    buf.reserve(24 + t.numel() * 16);
    buf += "WBT1";
    detail::put_u32(buf, 1u);
    detail::put_u32(buf, std::uint32_t(t.dtype()));
    detail::put_u32(buf, std::uint32_t(t.ndim()));
    for (auto d : t.dims()) {
        if (d >= (std::uint64_t(1) << 32))
            throw dim_error("tensor axis exceeds 2^32: " + path);
        detail::put_u64(buf, d);
    }
    if (t.dtype() == Dtype::f64) {
        for (double v : t.real_data()) detail::put_f64(buf, v);
    } else {
        for (const cplx_t& v : t.cplx_data()) {
            detail::put_f64(buf, v.real());
            detail::put_f64(buf, v.imag());
        }
    }

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("cannot open for writing: " + path);
    std::size_t put = std::fwrite(buf.data(), 1, buf.size(), f);
    int rc = std::fclose(f);
    if (put != buf.size() || rc != 0) throw io_error("short write: " + path);
}

inline Tensor read_tensor(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw io_error("cannot open for reading: " + path);
    std::string buf;
    char chunk[1 << 16];
    std::size_t got;
    while ((got = std::fread(chunk, 1, sizeof chunk, f)) > 0) buf.append(chunk, got);
    bool bad = std::ferror(f) != 0;
    std::fclose(f);
    if (bad) throw io_error("read failure: " + path);

    detail::ByteReader r{reinterpret_cast<const unsigned char*>(buf.data()), buf.size()};
    char magic[4];
    if (!r.take(magic, 4) || std::memcmp(magic, "WBT1", 4) != 0)
        throw format_error("bad magic, not a WBT1 file: " + path);
    std::uint32_t version, dtype, ndim;
    if (!r.u32(version) || !r.u32(dtype) || !r.u32(ndim))
        throw format_error("truncated header: " + path);
    if (version != 1) throw format_error("unsupported version: " + path);
    if (dtype != 1 && dtype != 2) throw format_error("unknown dtype: " + path);
    if (ndim > 8) throw format_error("implausible rank: " + path);

    std::vector<std::uint64_t> dims(ndim);
    std::size_t numel = ndim ? 1 : 0;
    for (auto& d : dims) {
        if (!r.u64(d)) throw format_error("truncated dims: " + path);
        if (d >= (std::uint64_t(1) << 32)) throw dim_error("tensor axis exceeds 2^32: " + path);
        if (d != 0 && numel > (std::size_t(1) << 40) / d)
            throw dim_error("tensor too large: " + path);
        numel *= std::size_t(d);
    }

    Tensor t = Tensor::zeros(Dtype(dtype), dims);
    if (dtype == 1) {
        for (auto& v : t.real_data())
            if (!r.f64(v)) throw format_error("truncated payload: " + path);
    } else {
        for (auto& v : t.cplx_data()) {
            double re, im;
            if (!r.f64(re) || !r.f64(im)) throw format_error("truncated payload: " + path);
            v = cplx_t(re, im);
        }
    }
    if (r.pos != r.n) throw format_error("trailing bytes: " + path);
    return t;
}

} // namespace wbe
