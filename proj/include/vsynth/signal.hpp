#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/rng.hpp"

namespace vsynth {

enum class SignalFamily { Sin, Step, Triangle, Gaussian };

inline const char* family_name(SignalFamily f) {
    switch (f) {
        case SignalFamily::Sin: return "sin";
        case SignalFamily::Step: return "step";
        case SignalFamily::Triangle: return "triangle";
        case SignalFamily::Gaussian: return "gaussian";
    }
    return "?";
}

inline SignalFamily family_from_name(const std::string& name) {
    if (name == "sin") return SignalFamily::Sin;
    if (name == "step") return SignalFamily::Step;
    if (name == "triangle") return SignalFamily::Triangle;
    if (name == "gaussian") return SignalFamily::Gaussian;
    throw ParamError("unknown signal family: " + name);
}

/// Half-open frame interval [begin, end).
struct FrameInterval {
    int begin = 0;
    int end = 0;
};

/// One periodic intensity signal. Values always stay within
/// [amp_min, amp_max] before noise and within [0, 1] after it.
struct SignalSpec {
    SignalFamily family = SignalFamily::Sin;
    double period_frames = 1.0;
    double phase_frames = 0.0;  // in [0, period_frames)
    double amp_min = 0.0;
    double amp_max = 1.0;
    std::vector<FrameInterval> flatten_intervals;
    double noise_std = 0.0;

    double frequency_hz(double fs) const { return fs / period_frames; }
};

/// Canonical unit cycle: x in [0, 1) -> [0, 1], with w(0) == 0 for the
/// three cyclic families. The Gaussian family is a single bump per cycle
/// centered at x = 0.5 with std 1/8 of the period.
inline double unit_waveform(SignalFamily family, double x) {
    switch (family) {
        case SignalFamily::Sin:
            return 0.5 - 0.5 * std::cos(Rng::two_pi * x);
        case SignalFamily::Step:
            return x < 0.5 ? 0.0 : 1.0;
        case SignalFamily::Triangle:
            return x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
        case SignalFamily::Gaussian: {
            const double z = (x - 0.5) * 8.0;
            return std::exp(-0.5 * z * z);
        }
    }
    return 0.0;
}

namespace detail {

inline double wrap_cycle_position(double t, const SignalSpec& spec) {
    double x = std::fmod(t + spec.phase_frames, spec.period_frames) /
               spec.period_frames;
    if (x < 0.0) x += 1.0;
    return x;
}

}  // namespace detail

/// Noise-free signal value at frame t, with flattening applied: inside a
/// flatten interval the value at the interval start is held constant.
inline double eval_signal_base(const SignalSpec& spec, double t) {
    for (const FrameInterval& iv : spec.flatten_intervals) {
        if (t >= iv.begin && t < iv.end) {
            t = iv.begin;
            break;
        }
    }
    const double x = detail::wrap_cycle_position(t, spec);
    return spec.amp_min +
           (spec.amp_max - spec.amp_min) * unit_waveform(spec.family, x);
}

/// Signal value at frame t. When an Rng is supplied and noise_std > 0,
/// additive white Gaussian noise is applied and the result clamped to [0, 1].
inline double eval_signal(const SignalSpec& spec, double t,
                          Rng* noise_rng = nullptr) {
    double v = eval_signal_base(spec, t);
    if (noise_rng != nullptr && spec.noise_std > 0.0)
        v += noise_rng->normal(0.0, spec.noise_std);
    return std::clamp(v, 0.0, 1.0);
}

/// Renders frames 0..length-1 of the signal (flattening + noise + clamp).
inline TimeSeries render_signal(const SignalSpec& spec, int length, double fs,
                                Rng& rng) {
    if (length < 0) throw ParamError("render_signal: negative length");
    TimeSeries out;
    out.fs = fs;
    out.values.resize(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t)
        out.values[static_cast<std::size_t>(t)] =
            eval_signal(spec, static_cast<double>(t), &rng);
    return out;
}

namespace detail {

inline void check_intervals(const std::vector<FrameInterval>& intervals,
                            std::size_t length) {
    std::vector<FrameInterval> sorted = intervals;
    std::sort(sorted.begin(), sorted.end(),
              [](const FrameInterval& a, const FrameInterval& b) {
                  return a.begin < b.begin;
              });
    int prev_end = 0;
    bool first = true;
    for (const FrameInterval& iv : sorted) {
        if (iv.begin < 0 || iv.end > static_cast<int>(length) ||
            iv.begin >= iv.end)
            throw ParamError("flatten interval out of bounds");
        if (!first && iv.begin < prev_end)
            throw ParamError("flatten intervals overlap");
        prev_end = iv.end;
        first = false;
    }
}

/// Samples family, amplitude bounds and phase for a fixed frequency.
inline SignalSpec sample_spec_at_frequency(Rng& rng, double freq_hz, double fs,
                                           double noise_std) {
    SignalSpec spec;
    spec.family = static_cast<SignalFamily>(rng.uniform_int(4));
    spec.period_frames = fs / freq_hz;
    const double a = rng.uniform();
    const double b = rng.uniform();
    spec.amp_min = std::min(a, b);
    spec.amp_max = std::max(a, b);
    spec.phase_frames = rng.uniform(0.0, spec.period_frames);
    spec.noise_std = noise_std;
    return spec;
}

}  // namespace detail

/// Draws a target signal whose frequency is uniform over the prior range.
inline SignalSpec sample_signal_spec(Rng& rng, const FrequencyRange& range,
                                     double fs, double noise_std = 0.0) {
    range.validate();
    if (fs <= 0.0) throw ParamError("sampling rate must be positive");
    const double f = rng.uniform(range.min_hz, range.max_hz);
    return detail::sample_spec_at_frequency(rng, f, fs, noise_std);
}

/// Support of the distractor frequency distribution: the excluded prior band
/// widened by a 10% separation margin and bounded to [min/4, 4*max]. Mass is
/// proportional to sub-interval length.
inline std::pair<FrequencyRange, FrequencyRange> distractor_support(
    const FrequencyRange& excluded) {
    excluded.validate();
    return {FrequencyRange{excluded.min_hz / 4.0, 0.9 * excluded.min_hz},
            FrequencyRange{1.1 * excluded.max_hz, 4.0 * excluded.max_hz}};
}

/// Draws a distractor signal whose frequency lies strictly outside the
/// excluded band.
inline SignalSpec sample_distractor_spec(Rng& rng,
                                         const FrequencyRange& excluded,
                                         double fs, double noise_std = 0.0) {
    if (fs <= 0.0) throw ParamError("sampling rate must be positive");
    const auto [low, high] = distractor_support(excluded);
    const double len_low = low.max_hz - low.min_hz;
    const double len_high = high.max_hz - high.min_hz;
    const double u = rng.uniform(0.0, len_low + len_high);
    const double f = u < len_low ? low.min_hz + u : high.min_hz + (u - len_low);
    return detail::sample_spec_at_frequency(rng, f, fs, noise_std);
}

/// Replaces the values inside each interval with the value at the interval
/// start. Intervals must be pairwise disjoint and within the series.
inline TimeSeries apply_flattening(const TimeSeries& series,
                                   const std::vector<FrameInterval>& intervals) {
    detail::check_intervals(intervals, series.size());
    TimeSeries out = series;
    for (const FrameInterval& iv : intervals) {
        const double hold = out.values[static_cast<std::size_t>(iv.begin)];
        for (int t = iv.begin; t < iv.end; ++t)
            out.values[static_cast<std::size_t>(t)] = hold;
    }
    return out;
}

}  // namespace vsynth
