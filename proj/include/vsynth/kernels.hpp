#pragma once

#include <cmath>
#include <vector>

#include "vsynth/core.hpp"

namespace vsynth {

/// Unit-sum Gaussian kernel with radius ceil(3*sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) throw ParamError("gaussian_kernel: sigma must be > 0");
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Index into [0, n) with symmetric reflection including the edge sample:
/// -1 -> 0, -2 -> 1, n -> n-1, ...
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i = i % period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

/// 1-D convolution with an odd-length kernel and reflect padding.
inline std::vector<double> convolve_reflect(const std::vector<double>& x,
                                            const std::vector<double>& kernel) {
    const int n = static_cast<int>(x.size());
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> out(x.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -radius; j <= radius; ++j)
            acc += kernel[static_cast<std::size_t>(j + radius)] *
                   x[static_cast<std::size_t>(reflect_index(i + j, n))];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

}  // namespace vsynth
