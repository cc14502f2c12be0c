#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsynth {

// Invalid argument or configuration value.
struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Series has no usable variance (e.g. normalizing a constant signal).
struct DegenerateSeriesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fewer peaks than required to derive a rate.
struct InsufficientPeaksError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value produced where a finite one is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File or stream level failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structured-config document violates the schema.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Prediction mask has no pixels; aggregators count this as a miss.
struct EmptyMaskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniformly sampled 1-D real signal.
struct TimeSeries {
    std::vector<double> values;
    double fs = 0.0;  // Hz

    TimeSeries() = default;
    TimeSeries(std::vector<double> v, double sampling_rate)
        : values(std::move(v)), fs(sampling_rate) {}

    std::size_t size() const { return values.size(); }
};

/// Closed frequency interval in Hz. A degenerate interval (min == max) is
/// allowed so a fixed frequency can be expressed as a prior.
struct FrequencyRange {
    double min_hz = 0.0;
    double max_hz = 0.0;

    void validate() const {
        if (!std::isfinite(min_hz) || !std::isfinite(max_hz))
            throw ParamError("frequency range must be finite");
        if (min_hz <= 0.0 || max_hz < min_hz)
            throw ParamError("frequency range requires 0 < min_hz <= max_hz");
    }

    bool contains(double f) const { return f >= min_hz && f <= max_hz; }
};

/// Axis-aligned pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return x1 <= x0 || y1 <= y0; }

    Rect clipped(int frame_w, int frame_h) const {
        Rect r = *this;
        r.x0 = std::max(r.x0, 0);
        r.y0 = std::max(r.y0, 0);
        r.x1 = std::min(r.x1, frame_w);
        r.y1 = std::min(r.y1, frame_h);
        return r;
    }
};

}  // namespace vsynth
