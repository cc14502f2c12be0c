#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vsynth {

/// Deterministic random source.
///
/// std::mt19937_64 output is pinned by the standard, but the std::
/// distributions are not, so the few distributions needed here are
/// implemented directly. Identical seeds therefore give identical streams
/// on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi). Exact at lo == hi.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Modulo bias is < n / 2^64.
    std::uint64_t uniform_int(std::uint64_t n) { return engine_() % n; }

    /// Gaussian draw via Box-Muller. No spare caching, so every call
    /// consumes exactly two engine outputs.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(two_pi * u2);
    }

    static constexpr double two_pi = 6.283185307179586476925286766559;

private:
    std::mt19937_64 engine_;
};

}  // namespace vsynth
