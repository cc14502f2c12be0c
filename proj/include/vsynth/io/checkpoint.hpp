#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/io/binary.hpp"

namespace vsynth::io {

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::uint32_t d : dims) {
            n *= d;
        }
        return n;
    }
};

// VSNP checkpoint: magic, format version, a config echo (structured text),
// then named little-endian float32 tensors.
struct Checkpoint {
    std::uint32_t version = 1;
    std::string config_text;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const {
        for (const NamedTensor& t : tensors) {
            if (t.name == name) {
                return &t;
            }
        }
        return nullptr;
    }
};

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    for (const NamedTensor& t : ckpt.tensors) {
        if (t.name.empty()) {
            throw ParamError("tensor name must be nonempty");
        }
        if (t.dims.empty()) {
            throw ParamError("tensor '" + t.name + "' must have rank >= 1");
        }
        for (std::uint32_t d : t.dims) {
            if (d == 0) {
                throw ParamError("tensor '" + t.name + "' has a zero dimension");
            }
        }
        if (t.data.size() != t.element_count()) {
            throw ParamError("tensor '" + t.name + "' data size " + std::to_string(t.data.size()) +
                             " does not match dims product " + std::to_string(t.element_count()));
        }
    }
    std::ofstream os = detail::open_for_write(path);
    detail::write_exact(os, "VSNP", 4);
    detail::write_u32_le(os, ckpt.version);
    detail::write_u32_le(os, static_cast<std::uint32_t>(ckpt.config_text.size()));
    detail::write_exact(os, ckpt.config_text.data(), ckpt.config_text.size());
    detail::write_u32_le(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const NamedTensor& t : ckpt.tensors) {
        detail::write_u32_le(os, static_cast<std::uint32_t>(t.name.size()));
        detail::write_exact(os, t.name.data(), t.name.size());
        detail::write_u8(os, 0);  // dtype tag: 32-bit float
        detail::write_u32_le(os, static_cast<std::uint32_t>(t.dims.size()));
        for (std::uint32_t d : t.dims) {
            detail::write_u32_le(os, d);
        }
        const std::string payload = detail::pack_f32_le(t.data.data(), t.data.size());
        detail::write_exact(os, payload.data(), payload.size());
    }
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::error_code ec;
    const std::uint64_t file_bytes = std::filesystem::file_size(path, ec);
    if (ec) {
        throw IoError("cannot stat: " + path);
    }
    std::ifstream is = detail::open_for_read(path);
    char magic[4];
    detail::read_exact(is, magic, 4, "magic");
    if (std::string(magic, 4) != "VSNP") {
        throw IoError("not a VSNP checkpoint: " + path);
    }
    Checkpoint ckpt;
    ckpt.version = detail::read_u32_le(is, "version");
    if (ckpt.version != 1) {
        throw IoError("unsupported checkpoint version " + std::to_string(ckpt.version) + " in " +
                      path);
    }
    const std::uint32_t config_len = detail::read_u32_le(is, "config length");
    if (config_len > file_bytes) {
        throw IoError("corrupt config length in " + path);
    }
    ckpt.config_text.resize(config_len);
    detail::read_exact(is, ckpt.config_text.data(), config_len, "config echo");
    const std::uint32_t tensor_count = detail::read_u32_le(is, "tensor count");
    ckpt.tensors.reserve(tensor_count);
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        NamedTensor t;
        const std::uint32_t name_len = detail::read_u32_le(is, "tensor name length");
        if (name_len == 0 || name_len > file_bytes) {
            throw IoError("corrupt tensor name length in " + path);
        }
        t.name.resize(name_len);
        detail::read_exact(is, t.name.data(), name_len, "tensor name");
        const std::uint8_t dtype = detail::read_u8(is, "dtype tag");
        if (dtype != 0) {
            throw IoError("unsupported dtype tag " + std::to_string(dtype) + " for tensor '" +
                          t.name + "' in " + path);
        }
        const std::uint32_t rank = detail::read_u32_le(is, "tensor rank");
        if (rank == 0 || rank > 8) {
            throw IoError("corrupt rank " + std::to_string(rank) + " for tensor '" + t.name +
                          "' in " + path);
        }
        t.dims.resize(rank);
        std::uint64_t count = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            t.dims[r] = detail::read_u32_le(is, "tensor dims");
            if (t.dims[r] == 0) {
                throw IoError("zero dimension for tensor '" + t.name + "' in " + path);
            }
            count *= t.dims[r];
        }
        if (count * 4 > file_bytes) {
            throw IoError("corrupt payload size for tensor '" + t.name + "' in " + path);
        }
        std::string payload(static_cast<std::size_t>(count) * 4, '\0');
        detail::read_exact(is, payload.data(), payload.size(), "tensor payload");
        t.data.resize(static_cast<std::size_t>(count));
        detail::unpack_f32_le(payload, t.data.data(), t.data.size());
        ckpt.tensors.push_back(std::move(t));
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw IoError("trailing data after last tensor in " + path);
    }
    return ckpt;
}

}  // namespace vsynth::io
