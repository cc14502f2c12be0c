#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vsynth/core.hpp"
#include "vsynth/io/config.hpp"
#include "vsynth/scene.hpp"

namespace vsynth::io {

// Run-length encoding of a binary mask over its flattened row-major pixels:
// each run is (start, length) of consecutive ones.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> rle_encode(const std::uint8_t* mask,
                                                                       std::size_t n) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
    std::size_t i = 0;
    while (i < n) {
        if (mask[i] != 0) {
            const std::size_t start = i;
            while (i < n && mask[i] != 0) {
                ++i;
            }
            runs.emplace_back(static_cast<std::uint32_t>(start),
                              static_cast<std::uint32_t>(i - start));
        } else {
            ++i;
        }
    }
    return runs;
}

inline std::vector<std::uint8_t> rle_decode(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& runs, std::size_t n) {
    std::vector<std::uint8_t> mask(n, 0);
    std::uint64_t prev_end = 0;
    for (const auto& [start, len] : runs) {
        if (len == 0) {
            throw IoError("zero-length run in mask encoding");
        }
        if (start < prev_end) {
            throw IoError("overlapping or unordered runs in mask encoding");
        }
        if (static_cast<std::uint64_t>(start) + len > n) {
            throw IoError("run exceeds mask size in mask encoding");
        }
        for (std::uint32_t i = 0; i < len; ++i) {
            mask[start + i] = 1;
        }
        prev_end = static_cast<std::uint64_t>(start) + len;
    }
    return mask;
}

// Ground-truth metadata stored alongside each video container.
struct Sidecar {
    double gt_rate = 0.0;
    std::vector<double> gt_signal;
    int mask_width = 0;
    int mask_height = 0;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> mask_runs;  // per frame
    VideoConfig config;

    std::vector<std::uint8_t> mask(int t) const {
        return rle_decode(mask_runs.at(static_cast<std::size_t>(t)),
                          static_cast<std::size_t>(mask_width) * mask_height);
    }
};

inline void write_sidecar(const std::string& path, const VideoSample& sample,
                          const VideoConfig& config) {
    nlohmann::json frames = nlohmann::json::array();
    const std::size_t frame_pixels =
        static_cast<std::size_t>(sample.width) * static_cast<std::size_t>(sample.height);
    for (int t = 0; t < sample.num_frames; ++t) {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& [start, len] : rle_encode(sample.mask(t), frame_pixels)) {
            runs.push_back(nlohmann::json::array({start, len}));
        }
        frames.push_back(std::move(runs));
    }
    nlohmann::json j;
    j["gt_rate"] = sample.gt_rate;
    j["gt_signal"] = sample.gt_signal.values;
    j["mask_rle"]["width"] = sample.width;
    j["mask_rle"]["height"] = sample.height;
    j["mask_rle"]["frames"] = std::move(frames);
    j["video_config"] = video_config_to_json(config);
    std::ofstream os = detail::open_for_write(path);
    os << j.dump(2) << "\n";
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

inline Sidecar read_sidecar(const std::string& path) {
    const nlohmann::json j = load_json_file(path);
    detail::StrictView v(j, path);
    Sidecar side;
    side.gt_rate = v.number("gt_rate", 0.0);
    const nlohmann::json* signal = v.array("gt_signal");
    if (signal == nullptr) {
        throw ConfigError(path + ": missing gt_signal");
    }
    side.gt_signal.reserve(signal->size());
    for (const auto& e : *signal) {
        if (!e.is_number()) {
            throw ConfigError(path + ".gt_signal: expected numbers");
        }
        side.gt_signal.push_back(e.get<double>());
    }
    const nlohmann::json* rle = v.object("mask_rle");
    if (rle == nullptr) {
        throw ConfigError(path + ": missing mask_rle");
    }
    {
        detail::StrictView rv(*rle, path + ".mask_rle");
        side.mask_width = rv.integer("width", 0);
        side.mask_height = rv.integer("height", 0);
        if (side.mask_width <= 0 || side.mask_height <= 0) {
            throw ConfigError(path + ".mask_rle: width and height must be positive");
        }
        const nlohmann::json* frames = rv.array("frames");
        if (frames == nullptr) {
            throw ConfigError(path + ".mask_rle: missing frames");
        }
        side.mask_runs.reserve(frames->size());
        for (const auto& frame : *frames) {
            if (!frame.is_array()) {
                throw ConfigError(path + ".mask_rle.frames: expected arrays of runs");
            }
            std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
            runs.reserve(frame.size());
            for (const auto& run : frame) {
                if (!run.is_array() || run.size() != 2 || !run[0].is_number_integer() ||
                    !run[1].is_number_integer()) {
                    throw ConfigError(path + ".mask_rle.frames: each run must be [start, length]");
                }
                runs.emplace_back(run[0].get<std::uint32_t>(), run[1].get<std::uint32_t>());
            }
            side.mask_runs.push_back(std::move(runs));
        }
        rv.done();
    }
    const nlohmann::json* cfg = v.object("video_config");
    if (cfg == nullptr) {
        throw ConfigError(path + ": missing video_config");
    }
    side.config = video_config_from_json(*cfg, path + ".video_config");
    v.done();
    return side;
}

}  // namespace vsynth::io
