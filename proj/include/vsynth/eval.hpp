#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/dsp.hpp"

namespace vsynth::eval {

// Windowing and peak-picking knobs shared by the evaluation commands.
// Defaults target respiration at 27 Hz: 1000-frame scoring windows
// (250 for heart rate), aggregates reported per minute (1620 frames).
struct EvalParams {
    int window = 1000;
    int report_window = 1620;
    int peak_min_distance = 40;

    void validate() const {
        if (window < 2) throw ConfigError("eval window must be at least 2 frames");
        if (report_window < 1) throw ConfigError("eval report window must be positive");
        if (peak_min_distance < 1) throw ConfigError("eval peak min distance must be positive");
    }
};

// ---------------------------------------------------------------------------
// Window-based rate evaluation
// ---------------------------------------------------------------------------

// Ground truth for rate evaluation: either discrete event times (inspiration
// starts or beats, strictly increasing frame indices) or a per-frame
// reference rate series in BPM. Exactly one of the two must be supplied.
struct RateAnnotation {
    std::vector<int> event_times;
    std::vector<double> rate_series;  // BPM, one value per frame
    double fs = 0.0;

    void validate(std::size_t signal_length) const {
        if (!(fs > 0.0)) {
            throw ParamError("annotation sampling rate must be positive");
        }
        const bool has_events = !event_times.empty();
        const bool has_series = !rate_series.empty();
        if (has_events == has_series) {
            throw ParamError("annotation needs event times or a rate series, not both");
        }
        for (std::size_t i = 1; i < event_times.size(); ++i) {
            if (event_times[i] <= event_times[i - 1]) {
                throw ParamError("annotation event times must be strictly increasing");
            }
        }
        if (has_series && rate_series.size() != signal_length) {
            throw ParamError("annotation rate series length must match the signal");
        }
    }
};

struct WindowRow {
    int window_start = 0;
    double predicted_rate = 0.0;
    double reference_rate = 0.0;
    std::string label;  // optional grouping tag, e.g. "Still" / "Moving"
};

struct MetricsReport {
    double mae = 0.0;
    double std = 0.0;
    std::vector<WindowRow> per_window;  // scored windows only
    std::map<std::string, double> extras;
};

namespace detail {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd r;
    if (xs.empty()) {
        return r;
    }
    double acc = 0.0;
    for (double x : xs) {
        acc += x;
    }
    r.mean = acc / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        const double d = x - r.mean;
        var += d * d;
    }
    r.std = std::sqrt(var / static_cast<double>(xs.size()));
    return r;
}

}  // namespace detail

// Counts vital-sign cycles in consecutive non-overlapping windows of the
// predicted signal and compares against the annotation, window by window.
// The reference rate uses the same first-to-last-event formula as the
// prediction so both sides share the counting quantization. `report_window`
// only labels the report (rates are already per minute); it is carried into
// the extras. Windows where either side cannot produce a rate are excluded
// from the aggregate and counted in the extras. Optional `window_labels`
// (one per window) add grouped aggregates to the extras.
inline MetricsReport windowed_rate_eval(const TimeSeries& pred_signal,
                                        const RateAnnotation& annotation, int window,
                                        int report_window,
                                        int peak_min_distance = 40,
                                        const std::vector<std::string>& window_labels = {}) {
    const std::size_t length = pred_signal.values.size();
    if (window < 2) {
        throw ParamError("evaluation window must cover at least 2 frames");
    }
    if (static_cast<std::size_t>(window) > length) {
        throw ParamError("evaluation window is longer than the signal");
    }
    if (report_window < 1) {
        throw ParamError("report window must be positive");
    }
    if (!(pred_signal.fs > 0.0)) {
        throw ParamError("signal sampling rate must be positive");
    }
    annotation.validate(length);

    const int num_windows = static_cast<int>(length) / window;
    if (!window_labels.empty() &&
        window_labels.size() != static_cast<std::size_t>(num_windows)) {
        throw ParamError("need exactly one label per evaluation window");
    }

    MetricsReport report;
    std::vector<double> errors;
    std::map<std::string, std::vector<double>> grouped;
    int pred_failed = 0;
    int ref_failed = 0;

    for (int w = 0; w < num_windows; ++w) {
        const int start = w * window;
        TimeSeries slice(std::vector<double>(pred_signal.values.begin() + start,
                                             pred_signal.values.begin() + start + window),
                         pred_signal.fs);

        double predicted = std::numeric_limits<double>::quiet_NaN();
        try {
            predicted = dsp::rate_from_peaks(dsp::detect_peaks(slice, peak_min_distance),
                                             slice.fs);
        } catch (const InsufficientPeaksError&) {
            ++pred_failed;
            continue;
        }

        double reference = std::numeric_limits<double>::quiet_NaN();
        if (!annotation.event_times.empty()) {
            std::vector<int> local;
            for (int e : annotation.event_times) {
                if (e >= start && e < start + window) {
                    local.push_back(e - start);
                }
            }
            if (local.size() < 2) {
                ++ref_failed;
                continue;
            }
            reference = dsp::rate_from_peaks(local, annotation.fs);
        } else {
            double acc = 0.0;
            for (int i = 0; i < window; ++i) {
                acc += annotation.rate_series[static_cast<std::size_t>(start + i)];
            }
            reference = acc / static_cast<double>(window);
        }

        WindowRow row{start, predicted, reference, ""};
        if (!window_labels.empty()) {
            row.label = window_labels[static_cast<std::size_t>(w)];
        }
        report.per_window.push_back(row);
        const double err = std::abs(predicted - reference);
        errors.push_back(err);
        if (!row.label.empty()) {
            grouped[row.label].push_back(err);
        }
    }

    const detail::MeanStd agg = detail::mean_std(errors);
    report.mae = agg.mean;
    report.std = agg.std;
    report.extras["windows_total"] = static_cast<double>(num_windows);
    report.extras["windows_scored"] = static_cast<double>(errors.size());
    report.extras["windows_pred_failed"] = static_cast<double>(pred_failed);
    report.extras["windows_ref_failed"] = static_cast<double>(ref_failed);
    report.extras["window"] = static_cast<double>(window);
    report.extras["report_window"] = static_cast<double>(report_window);
    for (const auto& [label, errs] : grouped) {
        const detail::MeanStd g = detail::mean_std(errs);
        report.extras["mae_" + label] = g.mean;
        report.extras["std_" + label] = g.std;
        report.extras["windows_" + label] = static_cast<double>(errs.size());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Temporal localization of cycle starts
// ---------------------------------------------------------------------------

struct LocalizationReport {
    double mean = 0.0;
    double std = 0.0;
    double median = 0.0;
    std::vector<double> ratios;  // one per matched period
    int periods = 0;
    int misses = 0;  // periods with no predicted peak inside
};

// For each annotated period [start_i, start_{i+1}), finds the predicted peak
// closest to start_i inside the period and reports the offset normalized by
// the period length, so 0 is a perfect hit and values never reach 1.
inline LocalizationReport temporal_localization(const std::vector<int>& pred_peaks,
                                                const std::vector<int>& gt_starts,
                                                double fs) {
    if (!(fs > 0.0)) {
        throw ParamError("sampling rate must be positive");
    }
    if (gt_starts.size() < 2) {
        throw ParamError("temporal localization needs at least 2 annotated starts");
    }
    for (std::size_t i = 1; i < gt_starts.size(); ++i) {
        if (gt_starts[i] <= gt_starts[i - 1]) {
            throw ParamError("annotated starts must be strictly increasing");
        }
    }
    for (std::size_t i = 1; i < pred_peaks.size(); ++i) {
        if (pred_peaks[i] <= pred_peaks[i - 1]) {
            throw ParamError("predicted peaks must be strictly increasing");
        }
    }

    LocalizationReport report;
    report.periods = static_cast<int>(gt_starts.size()) - 1;
    for (std::size_t i = 0; i + 1 < gt_starts.size(); ++i) {
        const int s0 = gt_starts[i];
        const int s1 = gt_starts[i + 1];
        int best = -1;
        for (int p : pred_peaks) {
            if (p < s0 || p >= s1) {
                continue;
            }
            if (best < 0 || std::abs(p - s0) < std::abs(best - s0)) {
                best = p;
            }
        }
        if (best < 0) {
            ++report.misses;
            continue;
        }
        report.ratios.push_back(static_cast<double>(std::abs(best - s0)) /
                                static_cast<double>(s1 - s0));
    }

    if (report.ratios.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        report.mean = report.std = report.median = nan;
        return report;
    }
    const detail::MeanStd agg = detail::mean_std(report.ratios);
    report.mean = agg.mean;
    report.std = agg.std;
    std::vector<double> sorted = report.ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    report.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return report;
}

// ---------------------------------------------------------------------------
// Region-of-interest metrics
// ---------------------------------------------------------------------------

struct RoiResult {
    double iou = 0.0;
    bool center_hit = false;
    double dc = 0.0;  // pixels between mask center of mass and box center
};

// Compares one binary mask against a reference rectangle treated as a filled
// mask. The rectangle is half-open ([x0, x1) x [y0, y1)) and is clipped to
// the frame before use. An all-zero mask cannot produce a center of mass and
// raises EmptyMaskError; sequence aggregation reports it as a miss.
inline RoiResult roi_metrics(const std::uint8_t* mask, int width, int height, Rect box) {
    if (width < 1 || height < 1) {
        throw ParamError("mask dimensions must be positive");
    }
    box = box.clipped(width, height);
    if (box.empty()) {
        throw ParamError("reference box does not intersect the frame");
    }

    std::int64_t mask_count = 0;
    std::int64_t inter = 0;
    double cx = 0.0, cy = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (mask[static_cast<std::size_t>(y) * width + x] == 0) {
                continue;
            }
            ++mask_count;
            cx += x;
            cy += y;
            if (x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1) {
                ++inter;
            }
        }
    }
    if (mask_count == 0) {
        throw EmptyMaskError("prediction mask is empty");
    }
    cx /= static_cast<double>(mask_count);
    cy /= static_cast<double>(mask_count);

    const std::int64_t box_count =
        static_cast<std::int64_t>(box.width()) * static_cast<std::int64_t>(box.height());
    RoiResult r;
    r.iou = static_cast<double>(inter) /
            static_cast<double>(mask_count + box_count - inter);
    // Pixel (x, y) covers the unit square centered at (x, y); the filled box
    // spans [x0, x1 - 1] x [y0, y1 - 1] in center coordinates.
    r.center_hit = cx >= box.x0 && cx <= box.x1 - 1 && cy >= box.y0 && cy <= box.y1 - 1;
    const double bx = 0.5 * (box.x0 + box.x1 - 1);
    const double by = 0.5 * (box.y0 + box.y1 - 1);
    r.dc = std::hypot(cx - bx, cy - by);
    return r;
}

struct RoiSequenceReport {
    double mean_iou = 0.0;
    double chr = 0.0;      // fraction of frames whose mask center hits the box
    double mean_dc = 0.0;  // over frames with a non-empty mask
    int frames = 0;
    int empty_frames = 0;
};

// Per-frame metrics pooled over a sequence. `boxes` holds either one
// rectangle (broadcast to all frames) or one per frame. Empty-mask frames
// count as iou 0 and a missed center, and are excluded from the distance
// average.
inline RoiSequenceReport roi_sequence_metrics(const std::uint8_t* masks, int frames,
                                              int width, int height,
                                              const std::vector<Rect>& boxes) {
    if (frames < 1) {
        throw ParamError("need at least one frame");
    }
    if (boxes.size() != 1 && boxes.size() != static_cast<std::size_t>(frames)) {
        throw ParamError("need one reference box total or one per frame");
    }
    RoiSequenceReport report;
    report.frames = frames;
    double iou_acc = 0.0;
    double dc_acc = 0.0;
    int hits = 0;
    int with_center = 0;
    const std::size_t plane = static_cast<std::size_t>(width) * height;
    for (int t = 0; t < frames; ++t) {
        const Rect box = boxes.size() == 1 ? boxes[0] : boxes[static_cast<std::size_t>(t)];
        try {
            const RoiResult r = roi_metrics(masks + static_cast<std::size_t>(t) * plane,
                                            width, height, box);
            iou_acc += r.iou;
            hits += r.center_hit ? 1 : 0;
            dc_acc += r.dc;
            ++with_center;
        } catch (const EmptyMaskError&) {
            ++report.empty_frames;
        }
    }
    report.mean_iou = iou_acc / static_cast<double>(frames);
    report.chr = static_cast<double>(hits) / static_cast<double>(frames);
    report.mean_dc = with_center > 0 ? dc_acc / static_cast<double>(with_center)
                                     : std::numeric_limits<double>::quiet_NaN();
    return report;
}

}  // namespace vsynth::eval
