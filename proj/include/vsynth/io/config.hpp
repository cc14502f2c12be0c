#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "vsynth/core.hpp"
#include "vsynth/dsp.hpp"
#include "vsynth/eval.hpp"
#include "vsynth/io/binary.hpp"
#include "vsynth/nn/vsignnet.hpp"
#include "vsynth/scene.hpp"

namespace vsynth::io {

namespace detail {

// Typed, unknown-key-rejecting view over a JSON object. Every accessor marks
// its key as recognized; done() rejects anything left over, so config typos
// fail loudly instead of silently using defaults.
class StrictView {
public:
    StrictView(const nlohmann::json& j, std::string where) : obj_(j), where_(std::move(where)) {
        if (!obj_.is_object()) {
            throw ConfigError(where_ + ": expected an object");
        }
    }

    double number(const char* key, double fallback) {
        const nlohmann::json* v = lookup(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number()) {
            throw ConfigError(where_ + "." + key + ": expected a number");
        }
        return v->get<double>();
    }

    int integer(const char* key, int fallback) {
        const nlohmann::json* v = lookup(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number_integer()) {
            throw ConfigError(where_ + "." + key + ": expected an integer");
        }
        return v->get<int>();
    }

    std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) {
        const nlohmann::json* v = lookup(key);
        if (v == nullptr) {
            return fallback;
        }
        if (v->is_number_unsigned()) {
            return v->get<std::uint64_t>();
        }
        if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
            return static_cast<std::uint64_t>(v->get<std::int64_t>());
        }
        throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
    }

    bool boolean(const char* key, bool fallback) {
        const nlohmann::json* v = lookup(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_boolean()) {
            throw ConfigError(where_ + "." + key + ": expected a boolean");
        }
        return v->get<bool>();
    }

    std::string text(const char* key, const std::string& fallback) {
        const nlohmann::json* v = lookup(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_string()) {
            throw ConfigError(where_ + "." + key + ": expected a string");
        }
        return v->get<std::string>();
    }

    // Returns nullptr when the key is absent.
    const nlohmann::json* object(const char* key) {
        const nlohmann::json* v = lookup(key);
        if (v != nullptr && !v->is_object()) {
            throw ConfigError(where_ + "." + key + ": expected an object");
        }
        return v;
    }

    const nlohmann::json* array(const char* key) {
        const nlohmann::json* v = lookup(key);
        if (v != nullptr && !v->is_array()) {
            throw ConfigError(where_ + "." + key + ": expected an array");
        }
        return v;
    }

    void done() {
        for (const auto& item : obj_.items()) {
            if (seen_.find(item.key()) == seen_.end()) {
                throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
            }
        }
    }

    const std::string& where() const { return where_; }

private:
    const nlohmann::json* lookup(const char* key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const nlohmann::json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json frequency_range_to_json(const FrequencyRange& r) {
    return nlohmann::json{{"min_hz", r.min_hz}, {"max_hz", r.max_hz}};
}

inline FrequencyRange frequency_range_from_json(const nlohmann::json& j,
                                                const std::string& where) {
    detail::StrictView v(j, where);
    FrequencyRange r;
    r.min_hz = v.number("min_hz", r.min_hz);
    r.max_hz = v.number("max_hz", r.max_hz);
    v.done();
    return r;
}

inline nlohmann::json video_config_to_json(const VideoConfig& c) {
    return nlohmann::json{
        {"width", c.width},
        {"height", c.height},
        {"num_frames", c.num_frames},
        {"fs", c.fs},
        {"n_interest", c.n_interest},
        {"n_distractors", c.n_distractors},
        {"blur_sigma", c.blur_sigma},
        {"sp_density", c.sp_density},
        {"bg_lowres_w", c.bg_lowres_w},
        {"bg_lowres_h", c.bg_lowres_h},
        {"bg_keyframe_stride", c.bg_keyframe_stride},
        {"target_range", frequency_range_to_json(c.target_range)},
        {"seed", c.seed},
        {"signal_noise_std", c.signal_noise_std},
        {"flatten_prob", c.flatten_prob},
        {"flatten_min_frames", c.flatten_min_frames},
        {"flatten_max_frames", c.flatten_max_frames},
        {"size_noise_std", c.size_noise_std},
        {"pos_noise_std", c.pos_noise_std},
    };
}

inline VideoConfig video_config_from_json(const nlohmann::json& j, const std::string& where) {
    detail::StrictView v(j, where);
    VideoConfig c;
    c.width = v.integer("width", c.width);
    c.height = v.integer("height", c.height);
    c.num_frames = v.integer("num_frames", c.num_frames);
    c.fs = v.number("fs", c.fs);
    c.n_interest = v.integer("n_interest", c.n_interest);
    c.n_distractors = v.integer("n_distractors", c.n_distractors);
    c.blur_sigma = v.number("blur_sigma", c.blur_sigma);
    c.sp_density = v.number("sp_density", c.sp_density);
    c.bg_lowres_w = v.integer("bg_lowres_w", c.bg_lowres_w);
    c.bg_lowres_h = v.integer("bg_lowres_h", c.bg_lowres_h);
    c.bg_keyframe_stride = v.integer("bg_keyframe_stride", c.bg_keyframe_stride);
    if (const nlohmann::json* r = v.object("target_range")) {
        c.target_range = frequency_range_from_json(*r, where + ".target_range");
    }
    c.seed = v.unsigned_integer("seed", c.seed);
    c.signal_noise_std = v.number("signal_noise_std", c.signal_noise_std);
    c.flatten_prob = v.number("flatten_prob", c.flatten_prob);
    c.flatten_min_frames = v.integer("flatten_min_frames", c.flatten_min_frames);
    c.flatten_max_frames = v.integer("flatten_max_frames", c.flatten_max_frames);
    c.size_noise_std = v.number("size_noise_std", c.size_noise_std);
    c.pos_noise_std = v.number("pos_noise_std", c.pos_noise_std);
    v.done();
    c.validate();
    return c;
}

inline nlohmann::json baseline_params_to_json(const dsp::BaselineParams& p) {
    return nlohmann::json{
        {"dog_sigma_narrow", p.dog_sigma_narrow},
        {"dog_sigma_wide", p.dog_sigma_wide},
        {"band_lo_hz", p.band_lo_hz},
        {"band_hi_hz", p.band_hi_hz},
        {"peak_min_distance", p.peak_min_distance},
    };
}

inline dsp::BaselineParams baseline_params_from_json(const nlohmann::json& j,
                                                     const std::string& where) {
    detail::StrictView v(j, where);
    dsp::BaselineParams p;
    p.dog_sigma_narrow = v.number("dog_sigma_narrow", p.dog_sigma_narrow);
    p.dog_sigma_wide = v.number("dog_sigma_wide", p.dog_sigma_wide);
    p.band_lo_hz = v.number("band_lo_hz", p.band_lo_hz);
    p.band_hi_hz = v.number("band_hi_hz", p.band_hi_hz);
    p.peak_min_distance = v.integer("peak_min_distance", p.peak_min_distance);
    v.done();
    return p;
}

namespace detail {

inline std::vector<int> int_array(StrictView& v, const char* key,
                                  const std::vector<int>& fallback) {
    const nlohmann::json* a = v.array(key);
    if (a == nullptr) {
        return fallback;
    }
    std::vector<int> out;
    out.reserve(a->size());
    for (const nlohmann::json& e : *a) {
        if (!e.is_number_integer()) {
            throw ConfigError(v.where() + "." + key + ": expected an array of integers");
        }
        out.push_back(e.get<int>());
    }
    return out;
}

}  // namespace detail

inline nlohmann::json model_config_to_json(const nn::ModelConfig& c) {
    return nlohmann::json{
        {"input_t", c.input_t},
        {"input_h", c.input_h},
        {"input_w", c.input_w},
        {"encoder_blocks", c.encoder_blocks},
        {"encoder_channels", c.encoder_channels},
        {"kernel", c.kernel},
        {"temporal_strides", c.temporal_strides},
        {"spatial_strides", c.spatial_strides},
        {"lstm_layers", c.lstm_layers},
        {"lstm_hidden", c.lstm_hidden},
        {"bidirectional", c.bidirectional},
        {"signal_head_widths", c.signal_head_widths},
        {"decoder_blocks", c.decoder_blocks},
        {"decoder_channels", c.decoder_channels},
        {"dropout", c.dropout},
        {"w_sig_local", c.w_sig_local},
        {"w_sig_global", c.w_sig_global},
        {"w_roi_local", c.w_roi_local},
        {"w_roi_global", c.w_roi_global},
        {"learning_rate", c.learning_rate},
        {"momentum", c.momentum},
        {"grad_clip", c.grad_clip},
        {"batch_size", c.batch_size},
        {"seed", c.seed},
    };
}

inline nn::ModelConfig model_config_from_json(const nlohmann::json& j,
                                              const std::string& where) {
    detail::StrictView v(j, where);
    nn::ModelConfig c;
    c.input_t = v.integer("input_t", c.input_t);
    c.input_h = v.integer("input_h", c.input_h);
    c.input_w = v.integer("input_w", c.input_w);
    c.encoder_blocks = v.integer("encoder_blocks", c.encoder_blocks);
    c.encoder_channels = v.integer("encoder_channels", c.encoder_channels);
    c.kernel = v.integer("kernel", c.kernel);
    c.temporal_strides = detail::int_array(v, "temporal_strides", c.temporal_strides);
    c.spatial_strides = detail::int_array(v, "spatial_strides", c.spatial_strides);
    c.lstm_layers = v.integer("lstm_layers", c.lstm_layers);
    c.lstm_hidden = v.integer("lstm_hidden", c.lstm_hidden);
    c.bidirectional = v.boolean("bidirectional", c.bidirectional);
    c.signal_head_widths = detail::int_array(v, "signal_head_widths", c.signal_head_widths);
    c.decoder_blocks = v.integer("decoder_blocks", c.decoder_blocks);
    c.decoder_channels = v.integer("decoder_channels", c.decoder_channels);
    c.dropout = v.number("dropout", c.dropout);
    c.w_sig_local = v.number("w_sig_local", c.w_sig_local);
    c.w_sig_global = v.number("w_sig_global", c.w_sig_global);
    c.w_roi_local = v.number("w_roi_local", c.w_roi_local);
    c.w_roi_global = v.number("w_roi_global", c.w_roi_global);
    c.learning_rate = v.number("learning_rate", c.learning_rate);
    c.momentum = v.number("momentum", c.momentum);
    c.grad_clip = v.number("grad_clip", c.grad_clip);
    c.batch_size = v.integer("batch_size", c.batch_size);
    c.seed = v.unsigned_integer("seed", c.seed);
    v.done();
    c.validate();
    return c;
}

inline nlohmann::json train_options_to_json(const nn::TrainOptions& t) {
    return nlohmann::json{
        {"steps", t.steps},
        {"data_seed", t.data_seed},
        {"video", video_config_to_json(t.video)},
    };
}

inline nn::TrainOptions train_options_from_json(const nlohmann::json& j,
                                                const std::string& where) {
    detail::StrictView v(j, where);
    nn::TrainOptions t;
    t.steps = v.integer("steps", t.steps);
    t.data_seed = v.unsigned_integer("data_seed", t.data_seed);
    if (const nlohmann::json* vc = v.object("video")) {
        t.video = video_config_from_json(*vc, where + ".video");
    }
    v.done();
    if (t.steps < 0) {
        throw ConfigError(where + ".steps: must be non-negative");
    }
    return t;
}

inline nlohmann::json eval_params_to_json(const eval::EvalParams& p) {
    return nlohmann::json{
        {"window", p.window},
        {"report_window", p.report_window},
        {"peak_min_distance", p.peak_min_distance},
    };
}

inline eval::EvalParams eval_params_from_json(const nlohmann::json& j,
                                              const std::string& where) {
    detail::StrictView v(j, where);
    eval::EvalParams p;
    p.window = v.integer("window", p.window);
    p.report_window = v.integer("report_window", p.report_window);
    p.peak_min_distance = v.integer("peak_min_distance", p.peak_min_distance);
    v.done();
    p.validate();
    return p;
}

// One document configuring every command: the generator, the model, the
// classical pipeline, the training stream and the evaluation windows. Every
// section is optional and falls back to defaults; unknown keys are rejected.
// The training stream reuses the top-level video section unless the train
// section carries its own.
struct RunConfig {
    VideoConfig video;
    nn::ModelConfig model;
    dsp::BaselineParams dsp_params;
    eval::EvalParams eval_params;
    nn::TrainOptions train;
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    return nlohmann::json{
        {"video", video_config_to_json(c.video)},
        {"model", model_config_to_json(c.model)},
        {"dsp", baseline_params_to_json(c.dsp_params)},
        {"eval", eval_params_to_json(c.eval_params)},
        {"train", train_options_to_json(c.train)},
    };
}

inline RunConfig run_config_from_json(const nlohmann::json& j, const std::string& where) {
    detail::StrictView v(j, where);
    RunConfig c;
    if (const nlohmann::json* s = v.object("video")) {
        c.video = video_config_from_json(*s, where + ".video");
    }
    if (const nlohmann::json* s = v.object("model")) {
        c.model = model_config_from_json(*s, where + ".model");
    }
    if (const nlohmann::json* s = v.object("dsp")) {
        c.dsp_params = baseline_params_from_json(*s, where + ".dsp");
    }
    if (const nlohmann::json* s = v.object("eval")) {
        c.eval_params = eval_params_from_json(*s, where + ".eval");
    }
    const nlohmann::json* train = v.object("train");
    v.done();
    c.train.video = c.video;
    if (train != nullptr) {
        const bool own_video = train->contains("video");
        c.train = train_options_from_json(*train, where + ".train");
        if (!own_video) {
            c.train.video = c.video;
        }
    }
    return c;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream is = detail::open_for_read(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

inline RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(load_json_file(path), path);
}

}  // namespace vsynth::io
