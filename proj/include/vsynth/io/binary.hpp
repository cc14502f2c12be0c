#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "vsynth/core.hpp"

namespace vsynth::io {

namespace detail {

inline void write_exact(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) {
        throw IoError("write failed");
    }
}

inline void read_exact(std::istream& is, void* data, std::size_t n, const std::string& what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw IoError("unexpected end of file while reading " + what);
    }
}

inline void write_u8(std::ostream& os, std::uint8_t v) {
    write_exact(os, &v, 1);
}

inline std::uint8_t read_u8(std::istream& is, const std::string& what) {
    std::uint8_t v = 0;
    read_exact(is, &v, 1, what);
    return v;
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xffu),
        static_cast<unsigned char>((v >> 8) & 0xffu),
        static_cast<unsigned char>((v >> 16) & 0xffu),
        static_cast<unsigned char>((v >> 24) & 0xffu),
    };
    write_exact(os, b, 4);
}

inline std::uint32_t read_u32_le(std::istream& is, const std::string& what) {
    unsigned char b[4];
    read_exact(is, b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32_le(std::ostream& os, float v) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    write_u32_le(os, bits);
}

inline float read_f32_le(std::istream& is, const std::string& what) {
    const std::uint32_t bits = read_u32_le(is, what);
    float v = 0.0f;
    std::memcpy(&v, &bits, 4);
    return v;
}

// Encodes a whole float array to little-endian bytes so the payload can be
// written with a single stream call.
inline std::string pack_f32_le(const float* data, std::size_t count) {
    std::string out(count * 4, '\0');
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, data + i, 4);
        out[4 * i + 0] = static_cast<char>(bits & 0xffu);
        out[4 * i + 1] = static_cast<char>((bits >> 8) & 0xffu);
        out[4 * i + 2] = static_cast<char>((bits >> 16) & 0xffu);
        out[4 * i + 3] = static_cast<char>((bits >> 24) & 0xffu);
    }
    return out;
}

inline void unpack_f32_le(const std::string& bytes, float* out, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits =
            static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + 0])) |
            (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + 1])) << 8) |
            (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + 2])) << 16) |
            (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + 3])) << 24);
        std::memcpy(out + i, &bits, 4);
    }
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os.is_open()) {
        throw IoError("cannot open for writing: " + path);
    }
    return os;
}

inline std::ifstream open_for_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is.is_open()) {
        throw IoError("cannot open for reading: " + path);
    }
    return is;
}

}  // namespace detail

// 64-bit FNV-1a; used for manifest checksums where a stable, dependency-free
// digest is all that is required (not a cryptographic hash).
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream is = detail::open_for_read(path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        const std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    if (is.bad()) {
        throw IoError("read failed: " + path);
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xfu];
        v >>= 4;
    }
    return out;
}

}  // namespace vsynth::io
