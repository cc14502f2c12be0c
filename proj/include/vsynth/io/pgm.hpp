#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/io/binary.hpp"
#include "vsynth/io/vsv.hpp"

namespace vsynth::io {

struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<std::uint16_t> pixels;  // row-major
};

namespace detail {

// Reads the next whitespace-delimited token from a PGM header, skipping
// '#'-to-end-of-line comments.
inline std::string pgm_next_token(std::istream& is, const std::string& path) {
    std::string token;
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') {
                c = is.get();
            }
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = is.get();
    }
    if (token.empty()) {
        throw IoError(path + ": truncated header");
    }
    // The single whitespace byte terminating the token is consumed, which for
    // the final header field is exactly the separator before the raster.
    return token;
}

inline int pgm_parse_header_int(std::istream& is, const std::string& path, const char* what,
                                int max_allowed) {
    const std::string token = pgm_next_token(is, path);
    for (char ch : token) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
            throw IoError(path + ": invalid " + what + " '" + token + "'");
        }
    }
    const long v = std::strtol(token.c_str(), nullptr, 10);
    if (v <= 0 || v > max_allowed) {
        throw IoError(path + ": " + what + " " + token + " out of range [1," +
                      std::to_string(max_allowed) + "]");
    }
    return static_cast<int>(v);
}

}  // namespace detail

// Binary (P5) grayscale image, 8- or 16-bit. 16-bit samples are big-endian as
// required by the format.
inline PgmImage read_pgm(const std::string& path) {
    std::ifstream is = detail::open_for_read(path);
    char magic[2];
    detail::read_exact(is, magic, 2, "magic");
    if (magic[0] != 'P' || magic[1] != '5') {
        throw IoError(path + ": not a binary PGM (P5) file");
    }
    PgmImage img;
    img.width = detail::pgm_parse_header_int(is, path, "width", 1 << 20);
    img.height = detail::pgm_parse_header_int(is, path, "height", 1 << 20);
    img.maxval = detail::pgm_parse_header_int(is, path, "maxval", 65535);
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    img.pixels.resize(count);
    if (img.maxval < 256) {
        std::vector<unsigned char> raw(count);
        detail::read_exact(is, raw.data(), raw.size(), "pixel raster");
        for (std::size_t i = 0; i < count; ++i) {
            img.pixels[i] = raw[i];
        }
    } else {
        std::vector<unsigned char> raw(count * 2);
        detail::read_exact(is, raw.data(), raw.size(), "pixel raster");
        for (std::size_t i = 0; i < count; ++i) {
            img.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (img.pixels[i] > img.maxval) {
            throw IoError(path + ": pixel value " + std::to_string(img.pixels[i]) +
                          " exceeds maxval " + std::to_string(img.maxval));
        }
    }
    return img;
}

inline void write_pgm16(const std::string& path, int width, int height,
                        const std::vector<std::uint16_t>& pixels) {
    if (width <= 0 || height <= 0) {
        throw ParamError("image dimensions must be positive");
    }
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (pixels.size() != count) {
        throw ParamError("pixel buffer size does not match dimensions");
    }
    std::ofstream os = detail::open_for_write(path);
    os << "P5\n" << width << ' ' << height << "\n65535\n";
    std::vector<unsigned char> raw(count * 2);
    for (std::size_t i = 0; i < count; ++i) {
        raw[2 * i] = static_cast<unsigned char>(pixels[i] >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(pixels[i] & 0xffu);
    }
    detail::write_exact(os, raw.data(), raw.size());
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

// Loads a directory of same-sized PGM frames (named by zero-padded frame index
// so lexicographic order is temporal order) and min-max normalizes intensities
// to [0,1] over the whole video. A constant video maps to all zeros.
inline VsvVideo load_frame_dir(const std::string& dir, double fs) {
    if (!(fs > 0.0)) {
        throw ParamError("sampling rate must be positive");
    }
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec) || ec) {
        throw IoError("not a directory: " + dir);
    }
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
            paths.push_back(entry.path().string());
        }
    }
    if (paths.empty()) {
        throw IoError("no .pgm frames in " + dir);
    }
    std::sort(paths.begin(), paths.end());

    VsvVideo video;
    video.fs = fs;
    video.num_frames = static_cast<int>(paths.size());
    std::uint16_t lo = 65535;
    std::uint16_t hi = 0;
    std::vector<std::uint16_t> all;
    for (std::size_t t = 0; t < paths.size(); ++t) {
        PgmImage img = read_pgm(paths[t]);
        if (t == 0) {
            video.width = img.width;
            video.height = img.height;
            all.reserve(static_cast<std::size_t>(video.width) * video.height * paths.size());
        } else if (img.width != video.width || img.height != video.height) {
            throw IoError(paths[t] + ": frame size " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + " differs from first frame " +
                          std::to_string(video.width) + "x" + std::to_string(video.height));
        }
        for (std::uint16_t v : img.pixels) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        all.insert(all.end(), img.pixels.begin(), img.pixels.end());
    }
    video.frames.resize(all.size());
    const double span = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t i = 0; i < all.size(); ++i) {
        video.frames[i] =
            span > 0.0 ? static_cast<float>((all[i] - lo) / span) : 0.0f;
    }
    return video;
}

}  // namespace vsynth::io
