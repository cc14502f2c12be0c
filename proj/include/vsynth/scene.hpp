#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/kernels.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/signal.hpp"

namespace vsynth {

enum class BlobRole { Interest, Distractor };

/// Full parameterization of one synthetic video.
struct VideoConfig {
    int width = 64;
    int height = 64;
    int num_frames = 256;
    double fs = 27.0;
    int n_interest = 2;
    int n_distractors = 2;
    double blur_sigma = 1.0;          // pixels
    double sp_density = 0.01;         // per-pixel corruption probability
    int bg_lowres_w = 4;
    int bg_lowres_h = 4;
    // Background keyframe spacing. At 27 Hz a 400-frame stride keeps the
    // drift spectrum (first null at fs/stride = 0.0675 Hz) below the 0.1 Hz
    // edge of the analysis band.
    int bg_keyframe_stride = 400;
    FrequencyRange target_range{0.24, 0.54};
    std::uint64_t seed = 0;
    // signal-level augmentations
    double signal_noise_std = 0.02;
    double flatten_prob = 0.0;        // chance the target signal gets one flat span
    int flatten_min_frames = 40;
    int flatten_max_frames = 120;
    // object motion noise; size/angle factor is N(1, size_noise_std)
    double size_noise_std = 0.1;
    double pos_noise_std = 1.0;       // additive pixels per step

    void validate() const {
        if (width < 16 || height < 16)
            throw ParamError("VideoConfig: width/height must be >= 16");
        if (num_frames < 2) throw ParamError("VideoConfig: num_frames must be >= 2");
        if (fs <= 0.0) throw ParamError("VideoConfig: fs must be positive");
        if (n_interest < 1) throw ParamError("VideoConfig: n_interest must be >= 1");
        if (n_distractors < 0) throw ParamError("VideoConfig: n_distractors < 0");
        if (!(sp_density >= 0.0 && sp_density < 1.0))
            throw ParamError("VideoConfig: sp_density must be in [0, 1)");
        if (blur_sigma < 0.0) throw ParamError("VideoConfig: blur_sigma < 0");
        if (bg_lowres_w < 1 || bg_lowres_h < 1)
            throw ParamError("VideoConfig: bg_lowres must be >= 1");
        if (bg_keyframe_stride < 1)
            throw ParamError("VideoConfig: bg_keyframe_stride must be >= 1");
        target_range.validate();
        if (signal_noise_std < 0.0 || size_noise_std < 0.0 || pos_noise_std < 0.0)
            throw ParamError("VideoConfig: noise std < 0");
        if (!(flatten_prob >= 0.0 && flatten_prob <= 1.0))
            throw ParamError("VideoConfig: flatten_prob must be in [0, 1]");
        if (flatten_min_frames < 1 || flatten_max_frames < flatten_min_frames)
            throw ParamError("VideoConfig: bad flatten length range");
    }
};

/// Per-frame stochastic state of one ellipse.
struct EllipseState {
    double cx = 0.0;
    double cy = 0.0;
    double ax0 = 1.0;       // semi-axis along the rotated x direction
    double ax1 = 1.0;
    double angle_deg = 0.0;
};

struct EllipseTrack {
    EllipseState start;
    double end_x = 0.0;     // final destination of the drift
    double end_y = 0.0;
    int z_order = 0;        // lower order subtracts from higher
    BlobRole role = BlobRole::Interest;
    SignalSpec signal;
};

/// Frame sequence plus its ground-truth tuple.
struct VideoSample {
    int width = 0;
    int height = 0;
    int num_frames = 0;
    double fs = 0.0;
    std::vector<float> frames;         // T x H x W, values in [0, 1]
    TimeSeries gt_signal;              // per-frame target signal value
    double gt_rate = 0.0;              // cycles/minute
    std::vector<std::uint8_t> gt_masks;  // T x H x W union of interest masks

    const float* frame(int t) const {
        return frames.data() + static_cast<std::size_t>(t) * height * width;
    }
    const std::uint8_t* mask(int t) const {
        return gt_masks.data() + static_cast<std::size_t>(t) * height * width;
    }
};

/// Draws one ellipse track. Positions and destination are uniform over the
/// frame, axes uniform in [1, Dim/4], angle uniform in [0, 360). When
/// fixed_signal is given it is used verbatim (interest blobs share one
/// signal); otherwise a signal is sampled according to the role.
inline EllipseTrack sample_ellipse_track(Rng& rng, const VideoConfig& cfg,
                                         BlobRole role, int z_order,
                                         const SignalSpec* fixed_signal = nullptr) {
    EllipseTrack track;
    track.role = role;
    track.z_order = z_order;
    track.start.cx = rng.uniform(0.0, static_cast<double>(cfg.width));
    track.start.cy = rng.uniform(0.0, static_cast<double>(cfg.height));
    track.start.ax0 = rng.uniform(1.0, cfg.width / 4.0);
    track.start.ax1 = rng.uniform(1.0, cfg.height / 4.0);
    track.start.angle_deg = rng.uniform(0.0, 360.0);
    track.end_x = rng.uniform(0.0, static_cast<double>(cfg.width));
    track.end_y = rng.uniform(0.0, static_cast<double>(cfg.height));
    if (fixed_signal != nullptr) {
        track.signal = *fixed_signal;
    } else if (role == BlobRole::Interest) {
        track.signal = sample_signal_spec(rng, cfg.target_range, cfg.fs,
                                          cfg.signal_noise_std);
    } else {
        track.signal = sample_distractor_spec(rng, cfg.target_range, cfg.fs,
                                              cfg.signal_noise_std);
    }
    return track;
}

/// Advances an ellipse from frame t-1 to frame t (1 <= t < T).
/// Axes and angle are multiplied by independent N(1, size_noise_std) draws;
/// position blends the previous position toward the track destination with
/// weight t/T plus additive N(0, pos_noise_std) per axis. Axes clamp to
/// [1, Dim/2], position to the frame.
inline EllipseState step_ellipse(const EllipseState& prev,
                                 const EllipseTrack& track, int t, int T,
                                 const VideoConfig& cfg, Rng& rng) {
    if (t < 1 || t >= T) throw ParamError("step_ellipse: need 1 <= t < T");
    EllipseState next;
    next.ax0 = std::clamp(prev.ax0 * rng.normal(1.0, cfg.size_noise_std), 1.0,
                          cfg.width / 2.0);
    next.ax1 = std::clamp(prev.ax1 * rng.normal(1.0, cfg.size_noise_std), 1.0,
                          cfg.height / 2.0);
    next.angle_deg = prev.angle_deg * rng.normal(1.0, cfg.size_noise_std);
    const double w_end = static_cast<double>(t) / static_cast<double>(T);
    const double w_prev = static_cast<double>(T - t) / static_cast<double>(T);
    next.cx = std::clamp(w_prev * prev.cx + w_end * track.end_x +
                             rng.normal(0.0, cfg.pos_noise_std),
                         0.0, static_cast<double>(cfg.width));
    next.cy = std::clamp(w_prev * prev.cy + w_end * track.end_y +
                             rng.normal(0.0, cfg.pos_noise_std),
                         0.0, static_cast<double>(cfg.height));
    return next;
}

namespace detail {
constexpr double deg_to_rad = 3.14159265358979323846264338327950288 / 180.0;
}

/// Fills a W x H bitmap with the rotated ellipse. A pixel belongs to the
/// ellipse iff its center (ix + 0.5, iy + 0.5) satisfies the ellipse
/// inequality; no anti-aliasing, masks stay binary.
inline void rasterize_ellipse_into(const EllipseState& e, int width, int height,
                                   std::vector<std::uint8_t>& out) {
    out.assign(static_cast<std::size_t>(width) * height, 0);
    const double theta = e.angle_deg * detail::deg_to_rad;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double ex = std::sqrt(e.ax0 * e.ax0 * c * c + e.ax1 * e.ax1 * s * s);
    const double ey = std::sqrt(e.ax0 * e.ax0 * s * s + e.ax1 * e.ax1 * c * c);
    const int x_lo = std::max(0, static_cast<int>(std::floor(e.cx - ex - 1.0)));
    const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(e.cx + ex + 1.0)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(e.cy - ey - 1.0)));
    const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(e.cy + ey + 1.0)));
    const double inv_a2 = 1.0 / (e.ax0 * e.ax0);
    const double inv_b2 = 1.0 / (e.ax1 * e.ax1);
    for (int iy = y_lo; iy <= y_hi; ++iy) {
        const double dy = (iy + 0.5) - e.cy;
        for (int ix = x_lo; ix <= x_hi; ++ix) {
            const double dx = (ix + 0.5) - e.cx;
            const double xr = c * dx + s * dy;
            const double yr = -s * dx + c * dy;
            if (xr * xr * inv_a2 + yr * yr * inv_b2 <= 1.0)
                out[static_cast<std::size_t>(iy) * width + ix] = 1;
        }
    }
}

/// Rasterizes every ellipse and subtracts all masks of strictly lower
/// z-order; the input must be ordered by ascending z. Returned masks are
/// pairwise disjoint, in input order.
inline std::vector<std::vector<std::uint8_t>> rasterize_scene_masks(
    const std::vector<EllipseState>& states_by_z, int width, int height) {
    const std::size_t npix = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> occupied(npix, 0);
    std::vector<std::uint8_t> raw;
    std::vector<std::vector<std::uint8_t>> masks;
    masks.reserve(states_by_z.size());
    for (const EllipseState& st : states_by_z) {
        rasterize_ellipse_into(st, width, height, raw);
        std::vector<std::uint8_t> mask(npix, 0);
        for (std::size_t i = 0; i < npix; ++i) {
            if (raw[i] && !occupied[i]) mask[i] = 1;
            occupied[i] |= raw[i];
        }
        masks.push_back(std::move(mask));
    }
    return masks;
}

/// Bilinear upsampling with half-pixel centers, computed in double.
inline std::vector<float> upsample_bilinear(const std::vector<double>& low,
                                            int low_w, int low_h, int width,
                                            int height) {
    std::vector<float> out(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        double sy = (y + 0.5) * static_cast<double>(low_h) / height - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(low_h - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, low_h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < width; ++x) {
            double sx = (x + 0.5) * static_cast<double>(low_w) / width - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(low_w - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, low_w - 1);
            const double fx = sx - x0;
            const double v =
                (1.0 - fy) * ((1.0 - fx) * low[static_cast<std::size_t>(y0) * low_w + x0] +
                              fx * low[static_cast<std::size_t>(y0) * low_w + x1]) +
                fy * ((1.0 - fx) * low[static_cast<std::size_t>(y1) * low_w + x0] +
                      fx * low[static_cast<std::size_t>(y1) * low_w + x1]);
            out[static_cast<std::size_t>(y) * width + x] = static_cast<float>(v);
        }
    }
    return out;
}

/// Smoothly drifting background: low-resolution U[0,1) keyframes every
/// bg_keyframe_stride frames, bilinearly upsampled, linearly interpolated
/// in time.
struct BackgroundModel {
    int width = 0;
    int height = 0;
    int stride = 1;
    std::vector<std::vector<float>> keyframes;  // upsampled H x W

    static BackgroundModel sample(Rng& rng, const VideoConfig& cfg) {
        BackgroundModel m;
        m.width = cfg.width;
        m.height = cfg.height;
        m.stride = cfg.bg_keyframe_stride;
        const int last = cfg.num_frames - 1;
        const int n_key = (last + m.stride - 1) / m.stride + 1;
        std::vector<double> low(static_cast<std::size_t>(cfg.bg_lowres_w) *
                                cfg.bg_lowres_h);
        m.keyframes.reserve(static_cast<std::size_t>(n_key));
        for (int k = 0; k < n_key; ++k) {
            for (double& v : low) v = rng.uniform();
            m.keyframes.push_back(upsample_bilinear(low, cfg.bg_lowres_w,
                                                    cfg.bg_lowres_h, m.width,
                                                    m.height));
        }
        return m;
    }

    void frame_at(int t, std::vector<float>& out) const {
        const int k = t / stride;
        const int t0 = k * stride;
        if (t == t0) {
            out = keyframes[static_cast<std::size_t>(k)];
            return;
        }
        const double w = static_cast<double>(t - t0) / stride;
        const std::vector<float>& a = keyframes[static_cast<std::size_t>(k)];
        const std::vector<float>& b = keyframes[static_cast<std::size_t>(k + 1)];
        out.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            out[i] = static_cast<float>((1.0 - w) * a[i] + w * b[i]);
    }
};

/// Full T x H x W background grid.
inline std::vector<float> generate_background(Rng& rng, const VideoConfig& cfg) {
    cfg.validate();
    const BackgroundModel model = BackgroundModel::sample(rng, cfg);
    const std::size_t npix = static_cast<std::size_t>(cfg.width) * cfg.height;
    std::vector<float> out(npix * static_cast<std::size_t>(cfg.num_frames));
    std::vector<float> scratch;
    for (int t = 0; t < cfg.num_frames; ++t) {
        model.frame_at(t, scratch);
        std::copy(scratch.begin(), scratch.end(),
                  out.begin() + static_cast<std::size_t>(t) * npix);
    }
    return out;
}

/// Separable Gaussian blur with reflect padding, in place.
inline void gaussian_blur_2d(std::vector<float>& img, int width, int height,
                             double sigma) {
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> tmp(img.size());
    for (int y = 0; y < height; ++y) {
        const float* row = img.data() + static_cast<std::size_t>(y) * width;
        double* trow = tmp.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                acc += kernel[static_cast<std::size_t>(j + radius)] *
                       row[reflect_index(x + j, width)];
            trow[x] = acc;
        }
    }
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                acc += kernel[static_cast<std::size_t>(j + radius)] *
                       tmp[static_cast<std::size_t>(reflect_index(y + j, height)) * width + x];
            img[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
        }
    }
}

/// Composes one frame: per-mask signal value over the background, Gaussian
/// blur, salt-and-pepper, clamp. Masks must be pairwise disjoint; an overlap
/// indicates a mask-subtraction bug upstream.
inline std::vector<float> compose_frame(
    const std::vector<std::vector<std::uint8_t>>& masks,
    const std::vector<float>& mask_values, const std::vector<float>& background,
    const VideoConfig& cfg, Rng& rng) {
    const std::size_t npix = static_cast<std::size_t>(cfg.width) * cfg.height;
    if (masks.size() != mask_values.size())
        throw ParamError("compose_frame: masks/values size mismatch");
    if (background.size() != npix)
        throw ParamError("compose_frame: background size mismatch");

    std::vector<float> frame = background;
    std::vector<std::uint8_t> covered(npix, 0);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        const std::vector<std::uint8_t>& m = masks[k];
        if (m.size() != npix) throw ParamError("compose_frame: mask size mismatch");
        const float v = mask_values[k];
        for (std::size_t i = 0; i < npix; ++i) {
            if (!m[i]) continue;
            if (covered[i])
                throw std::logic_error("compose_frame: overlapping masks");
            covered[i] = 1;
            frame[i] = v;
        }
    }

    if (cfg.blur_sigma > 0.0)
        gaussian_blur_2d(frame, cfg.width, cfg.height, cfg.blur_sigma);

    if (cfg.sp_density > 0.0) {
        const double half = cfg.sp_density / 2.0;
        for (std::size_t i = 0; i < npix; ++i) {
            const double u = rng.uniform();
            if (u < cfg.sp_density) frame[i] = u < half ? 0.0f : 1.0f;
        }
    }

    for (float& v : frame) v = std::clamp(v, 0.0f, 1.0f);
    return frame;
}

/// Generates a complete synthetic video with its ground-truth tuple.
/// Pure function of the config (seed included).
inline VideoSample generate_video(const VideoConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int T = cfg.num_frames;
    const std::size_t npix = static_cast<std::size_t>(cfg.width) * cfg.height;

    // One target signal shared by every interest blob.
    SignalSpec target = sample_signal_spec(rng, cfg.target_range, cfg.fs,
                                           cfg.signal_noise_std);
    if (cfg.flatten_prob > 0.0 && rng.uniform() < cfg.flatten_prob) {
        const int max_len = std::min(cfg.flatten_max_frames, T);
        const int min_len = std::min(cfg.flatten_min_frames, max_len);
        const int len =
            min_len + static_cast<int>(rng.uniform_int(
                          static_cast<std::uint64_t>(max_len - min_len + 1)));
        const int start = static_cast<int>(
            rng.uniform_int(static_cast<std::uint64_t>(T - len + 1)));
        target.flatten_intervals.push_back({start, start + len});
    }

    std::vector<EllipseTrack> tracks;
    tracks.reserve(static_cast<std::size_t>(cfg.n_interest + cfg.n_distractors));
    for (int i = 0; i < cfg.n_interest; ++i)
        tracks.push_back(sample_ellipse_track(rng, cfg, BlobRole::Interest, i,
                                              &target));
    for (int j = 0; j < cfg.n_distractors; ++j)
        tracks.push_back(sample_ellipse_track(rng, cfg, BlobRole::Distractor,
                                              cfg.n_interest + j));

    // Per-frame signal values, quantized to float so that the mean over a
    // rendered mask reproduces the ground-truth value exactly.
    const TimeSeries target_series =
        render_signal(target, T, cfg.fs, rng);
    std::vector<float> target_values(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        target_values[static_cast<std::size_t>(t)] =
            static_cast<float>(target_series.values[static_cast<std::size_t>(t)]);

    std::vector<std::vector<float>> distractor_values;
    for (const EllipseTrack& track : tracks) {
        if (track.role != BlobRole::Distractor) continue;
        const TimeSeries s = render_signal(track.signal, T, cfg.fs, rng);
        std::vector<float> q(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t)
            q[static_cast<std::size_t>(t)] =
                static_cast<float>(s.values[static_cast<std::size_t>(t)]);
        distractor_values.push_back(std::move(q));
    }

    const BackgroundModel background = BackgroundModel::sample(rng, cfg);

    VideoSample sample;
    sample.width = cfg.width;
    sample.height = cfg.height;
    sample.num_frames = T;
    sample.fs = cfg.fs;
    sample.frames.resize(npix * static_cast<std::size_t>(T));
    sample.gt_masks.assign(npix * static_cast<std::size_t>(T), 0);
    sample.gt_signal.fs = cfg.fs;
    sample.gt_signal.values.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        sample.gt_signal.values[static_cast<std::size_t>(t)] =
            static_cast<double>(target_values[static_cast<std::size_t>(t)]);
    sample.gt_rate = 60.0 * target.frequency_hz(cfg.fs);

    std::vector<EllipseState> states;
    states.reserve(tracks.size());
    for (const EllipseTrack& track : tracks) states.push_back(track.start);

    std::vector<float> mask_values(tracks.size());
    std::vector<float> bg_frame;
    for (int t = 0; t < T; ++t) {
        if (t > 0)
            for (std::size_t k = 0; k < tracks.size(); ++k)
                states[k] = step_ellipse(states[k], tracks[k], t, T, cfg, rng);

        const std::vector<std::vector<std::uint8_t>> masks =
            rasterize_scene_masks(states, cfg.width, cfg.height);

        std::size_t d = 0;
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            if (tracks[k].role == BlobRole::Interest) {
                mask_values[k] = target_values[static_cast<std::size_t>(t)];
            } else {
                mask_values[k] = distractor_values[d][static_cast<std::size_t>(t)];
                ++d;
            }
        }

        // gt masks are the very buffers used for composition
        std::uint8_t* gt = sample.gt_masks.data() + static_cast<std::size_t>(t) * npix;
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            if (tracks[k].role != BlobRole::Interest) continue;
            const std::vector<std::uint8_t>& m = masks[k];
            for (std::size_t i = 0; i < npix; ++i) gt[i] |= m[i];
        }

        background.frame_at(t, bg_frame);
        const std::vector<float> frame =
            compose_frame(masks, mask_values, bg_frame, cfg, rng);
        std::copy(frame.begin(), frame.end(),
                  sample.frames.begin() + static_cast<std::size_t>(t) * npix);
    }
    return sample;
}

}  // namespace vsynth
