#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/kernels.hpp"

namespace vsynth::dsp {

namespace fft {

constexpr double pi = 3.14159265358979323846264338327950288;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

/// In-place iterative radix-2 transform. Size must be a power of two.
inline void transform_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
        const std::complex<double> step(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= step;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= inv_n;
    }
}

/// Bluestein chirp-z for arbitrary sizes, forward direction only.
inline std::vector<std::complex<double>> bluestein_forward(
    const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    const std::size_t m = next_pow2(2 * n - 1);

    // chirp angles use k^2 mod 2n so the cos/sin arguments stay small
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) %
                                 (2 * static_cast<std::uint64_t>(n));
        const double ang = pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = {std::cos(ang), -std::sin(ang)};
    }

    std::vector<std::complex<double>> a(m), b(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k)
        b[k] = b[m - k] = std::conj(chirp[k]);

    transform_pow2(a, false);
    transform_pow2(b, false);
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    transform_pow2(a, true);

    std::vector<std::complex<double>> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = a[k] * chirp[k];
    return y;
}

/// In-place DFT of arbitrary size; O(n log n) in both branches.
inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size())) {
        transform_pow2(a, inverse);
        return;
    }
    if (!inverse) {
        a = bluestein_forward(a);
        return;
    }
    for (auto& z : a) z = std::conj(z);
    a = bluestein_forward(a);
    const double inv_n = 1.0 / static_cast<double>(a.size());
    for (auto& z : a) z = std::conj(z) * inv_n;
}

}  // namespace fft

/// Forward DFT of a real series.
inline std::vector<std::complex<double>> dft(const std::vector<double>& x) {
    std::vector<std::complex<double>> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft::transform(a, false);
    return a;
}

/// Mean pixel intensity over a per-frame ROI box.
/// frames: frame-major T x H x W grid; boxes: one per frame.
inline TimeSeries mean_roi_signal(const std::vector<float>& frames,
                                  int num_frames, int height, int width,
                                  double fs, const std::vector<Rect>& boxes) {
    if (num_frames <= 0 || height <= 0 || width <= 0)
        throw ParamError("mean_roi_signal: bad frame dimensions");
    if (frames.size() != static_cast<std::size_t>(num_frames) * height * width)
        throw ParamError("mean_roi_signal: frame buffer size mismatch");
    if (boxes.size() != static_cast<std::size_t>(num_frames))
        throw ParamError("mean_roi_signal: need one box per frame");

    TimeSeries out;
    out.fs = fs;
    out.values.resize(static_cast<std::size_t>(num_frames));
    for (int t = 0; t < num_frames; ++t) {
        const Rect box = boxes[static_cast<std::size_t>(t)].clipped(width, height);
        if (box.empty())
            throw ParamError("mean_roi_signal: box outside frame at frame " +
                             std::to_string(t));
        const float* frame =
            frames.data() + static_cast<std::size_t>(t) * height * width;
        double sum = 0.0;
        for (int y = box.y0; y < box.y1; ++y)
            for (int x = box.x0; x < box.x1; ++x)
                sum += frame[y * width + x];
        out.values[static_cast<std::size_t>(t)] =
            sum / (static_cast<double>(box.width()) * box.height());
    }
    return out;
}

/// Removes transients by subtracting the Difference-of-Gaussians response:
/// out = x - (G_narrow * x - G_wide * x). Reflect padding, unit-sum kernels.
inline TimeSeries dog_detrend(const TimeSeries& series, double sigma_narrow,
                              double sigma_wide) {
    if (!(sigma_narrow > 0.0) || !(sigma_narrow < sigma_wide))
        throw ParamError("dog_detrend: need 0 < sigma_narrow < sigma_wide");
    if (static_cast<double>(series.size()) <= 6.0 * sigma_wide)
        throw ParamError("dog_detrend: series shorter than 6*sigma_wide");
    const std::vector<double> narrow =
        convolve_reflect(series.values, gaussian_kernel(sigma_narrow));
    const std::vector<double> wide =
        convolve_reflect(series.values, gaussian_kernel(sigma_wide));
    TimeSeries out = series;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] -= narrow[i] - wide[i];
    return out;
}

/// Zero mean, unit population std.
inline TimeSeries normalize(const TimeSeries& series) {
    const std::size_t n = series.size();
    if (n == 0) throw ParamError("normalize: empty series");
    double mean = 0.0;
    for (double v : series.values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : series.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd < 1e-12)
        throw DegenerateSeriesError("normalize: series is constant");
    TimeSeries out = series;
    for (double& v : out.values) v = (v - mean) / sd;
    return out;
}

/// Ideal band-pass: forward DFT, zero every bin with |f| outside
/// [f_lo, f_hi], inverse DFT, real part.
inline TimeSeries bandpass(const TimeSeries& series, double f_lo, double f_hi) {
    const std::size_t n = series.size();
    if (n < 2) throw ParamError("bandpass: series too short");
    if (!(f_lo > 0.0) || !(f_lo < f_hi) || !(f_hi < series.fs / 2.0))
        throw ParamError("bandpass: need 0 < f_lo < f_hi < fs/2");
    std::vector<std::complex<double>> spec = dft(series.values);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kk = std::min(k, n - k);
        const double f = series.fs * static_cast<double>(kk) / static_cast<double>(n);
        if (f < f_lo || f > f_hi) spec[k] = 0.0;
    }
    fft::transform(spec, true);
    TimeSeries out = series;
    for (std::size_t i = 0; i < n; ++i) out.values[i] = spec[i].real();
    return out;
}

/// Rate in cycles/minute of the strongest DFT bin inside the band.
/// Ties break toward the lower frequency.
inline double dft_rate(const TimeSeries& series, const FrequencyRange& band) {
    band.validate();
    const std::size_t n = series.size();
    if (n < 2) throw ParamError("dft_rate: series too short");
    const std::vector<std::complex<double>> spec = dft(series.values);
    std::size_t best_bin = 0;
    double best_mag = -1.0;
    bool found = false;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = series.fs * static_cast<double>(k) / static_cast<double>(n);
        if (!band.contains(f)) continue;
        const double mag = std::abs(spec[k]);
        if (!found || mag > best_mag) {
            found = true;
            best_mag = mag;
            best_bin = k;
        }
    }
    if (!found) throw ParamError("dft_rate: no DFT bins inside band");
    return 60.0 * series.fs * static_cast<double>(best_bin) /
           static_cast<double>(n);
}

/// Local maxima with a minimum index distance, selected greedily by
/// descending height (ties toward the lower index). A plateau of equal
/// values counts as one candidate at its center.
inline std::vector<int> detect_peaks(const TimeSeries& series,
                                     int min_distance) {
    if (min_distance < 1) throw ParamError("detect_peaks: min_distance >= 1");
    const std::vector<double>& v = series.values;
    const int n = static_cast<int>(v.size());

    struct Candidate {
        int idx;
        double height;
    };
    std::vector<Candidate> candidates;
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && v[static_cast<std::size_t>(j + 1)] ==
                                v[static_cast<std::size_t>(i)])
            ++j;
        if (i > 0 && j + 1 < n &&
            v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(i - 1)] &&
            v[static_cast<std::size_t>(j)] > v[static_cast<std::size_t>(j + 1)])
            candidates.push_back({(i + j) / 2, v[static_cast<std::size_t>(i)]});
        i = j + 1;
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.height != b.height) return a.height > b.height;
                  return a.idx < b.idx;
              });
    std::vector<int> taken;
    for (const Candidate& c : candidates) {
        bool clashes = false;
        for (int t : taken)
            if (std::abs(t - c.idx) < min_distance) {
                clashes = true;
                break;
            }
        if (!clashes) taken.push_back(c.idx);
    }
    std::sort(taken.begin(), taken.end());
    return taken;
}

/// Average rate in cycles/minute from the first-to-last peak span.
inline double rate_from_peaks(const std::vector<int>& peaks, double fs) {
    if (fs <= 0.0) throw ParamError("rate_from_peaks: fs must be positive");
    if (peaks.size() < 2)
        throw InsufficientPeaksError("rate_from_peaks: need at least 2 peaks");
    const double span_s =
        static_cast<double>(peaks.back() - peaks.front()) / fs;
    if (span_s <= 0.0)
        throw ParamError("rate_from_peaks: peaks must be increasing");
    return 60.0 * static_cast<double>(peaks.size() - 1) / span_s;
}

/// Classical pipeline parameters. Sigma values are in frames. The detrend
/// sigmas are sized so the subtracted response covers drift below the
/// analysis band without touching it: at 27 Hz the narrow kernel starts
/// passing near 0.1 Hz while the band itself transmits at 0.4-0.99.
struct BaselineParams {
    double dog_sigma_narrow = 25.0;
    double dog_sigma_wide = 100.0;
    double band_lo_hz = 0.1;
    double band_hi_hz = 0.8;
    int peak_min_distance = 40;
};

struct BaselineStages {
    TimeSeries roi_mean;
    TimeSeries detrended;
    TimeSeries normalized;
    TimeSeries bandpassed;
};

/// DoG detrend -> normalize -> band-pass, keeping every stage for dumps.
inline BaselineStages run_baseline_stages(const TimeSeries& roi_mean,
                                          const BaselineParams& p) {
    BaselineStages s;
    s.roi_mean = roi_mean;
    s.detrended = dog_detrend(roi_mean, p.dog_sigma_narrow, p.dog_sigma_wide);
    s.normalized = normalize(s.detrended);
    s.bandpassed = bandpass(s.normalized, p.band_lo_hz, p.band_hi_hz);
    return s;
}

inline double baseline_dft_rate(const BaselineStages& s,
                                const BaselineParams& p) {
    return dft_rate(s.bandpassed, FrequencyRange{p.band_lo_hz, p.band_hi_hz});
}

inline double baseline_peak_rate(const BaselineStages& s,
                                 const BaselineParams& p) {
    return rate_from_peaks(detect_peaks(s.bandpassed, p.peak_min_distance),
                           s.bandpassed.fs);
}

}  // namespace vsynth::dsp
