#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/io/binary.hpp"

namespace vsynth::io {

// In-memory form of the VSV video container: grayscale frames in [0,1],
// frame-major then row-major.
struct VsvVideo {
    int width = 0;
    int height = 0;
    int num_frames = 0;
    double fs = 0.0;
    std::vector<float> frames;

    const float* frame(int t) const {
        return frames.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(height) *
                                   static_cast<std::size_t>(width);
    }
    float* frame(int t) {
        return frames.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(height) *
                                   static_cast<std::size_t>(width);
    }
};

namespace detail {

constexpr std::size_t kVsvHeaderBytes = 4 + 4 + 4 + 4 + 4 + 1;

inline void check_vsv_fields(int width, int height, int num_frames, double fs,
                             const std::vector<float>& frames) {
    if (width <= 0 || height <= 0 || num_frames <= 0) {
        throw ParamError("video dimensions must be positive");
    }
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw ParamError("sampling rate must be finite and positive");
    }
    const std::size_t expected = static_cast<std::size_t>(width) *
                                 static_cast<std::size_t>(height) *
                                 static_cast<std::size_t>(num_frames);
    if (frames.size() != expected) {
        throw ParamError("frame buffer size does not match dimensions");
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const float v = frames[i];
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw ParamError("frame value out of [0,1] at flat index " + std::to_string(i));
        }
    }
}

}  // namespace detail

inline void write_vsv(const std::string& path, int width, int height, int num_frames, double fs,
                      const std::vector<float>& frames) {
    detail::check_vsv_fields(width, height, num_frames, fs, frames);
    std::ofstream os = detail::open_for_write(path);
    detail::write_exact(os, "VSV1", 4);
    detail::write_u32_le(os, static_cast<std::uint32_t>(width));
    detail::write_u32_le(os, static_cast<std::uint32_t>(height));
    detail::write_u32_le(os, static_cast<std::uint32_t>(num_frames));
    detail::write_f32_le(os, static_cast<float>(fs));
    detail::write_u8(os, 0);  // dtype tag: 32-bit float
    const std::string payload = detail::pack_f32_le(frames.data(), frames.size());
    detail::write_exact(os, payload.data(), payload.size());
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

inline void write_vsv(const std::string& path, const VsvVideo& video) {
    write_vsv(path, video.width, video.height, video.num_frames, video.fs, video.frames);
}

inline VsvVideo read_vsv(const std::string& path) {
    std::error_code ec;
    const auto file_bytes = std::filesystem::file_size(path, ec);
    if (ec) {
        throw IoError("cannot stat: " + path);
    }
    std::ifstream is = detail::open_for_read(path);
    char magic[4];
    detail::read_exact(is, magic, 4, "magic");
    if (std::string(magic, 4) != "VSV1") {
        throw IoError("not a VSV file: " + path);
    }
    VsvVideo video;
    const std::uint32_t width = detail::read_u32_le(is, "width");
    const std::uint32_t height = detail::read_u32_le(is, "height");
    const std::uint32_t num_frames = detail::read_u32_le(is, "frame count");
    const float fs = detail::read_f32_le(is, "sampling rate");
    const std::uint8_t dtype = detail::read_u8(is, "dtype tag");
    if (dtype != 0) {
        throw IoError("unsupported dtype tag " + std::to_string(dtype) + " in " + path);
    }
    if (width == 0 || height == 0 || num_frames == 0) {
        throw IoError("zero dimension in " + path);
    }
    if (!(fs > 0.0f) || !std::isfinite(fs)) {
        throw IoError("invalid sampling rate in " + path);
    }
    const std::uint64_t count = static_cast<std::uint64_t>(width) * height * num_frames;
    const std::uint64_t expected_bytes = detail::kVsvHeaderBytes + count * 4;
    if (file_bytes != expected_bytes) {
        throw IoError("payload size mismatch in " + path + ": expected " +
                      std::to_string(expected_bytes) + " bytes, file has " +
                      std::to_string(file_bytes));
    }
    video.width = static_cast<int>(width);
    video.height = static_cast<int>(height);
    video.num_frames = static_cast<int>(num_frames);
    video.fs = static_cast<double>(fs);
    std::string payload(static_cast<std::size_t>(count) * 4, '\0');
    detail::read_exact(is, payload.data(), payload.size(), "frame payload");
    video.frames.resize(static_cast<std::size_t>(count));
    detail::unpack_f32_le(payload, video.frames.data(), video.frames.size());
    for (std::size_t i = 0; i < video.frames.size(); ++i) {
        const float v = video.frames[i];
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw IoError("frame value out of [0,1] at flat index " + std::to_string(i) + " in " +
                          path);
        }
    }
    return video;
}

}  // namespace vsynth::io
