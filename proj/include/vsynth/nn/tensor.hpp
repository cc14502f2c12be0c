#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/rng.hpp"

namespace vsynth::nn {

// Dense row-major tensor of doubles. Training math runs in double so that
// finite-difference gradient verification is meaningful; checkpoints narrow to
// float32 on write.
struct Tensor {
    std::vector<int> dims;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : dims(std::move(shape)) {
        std::size_t n = 1;
        for (int d : dims) {
            if (d <= 0) {
                throw ParamError("tensor dimensions must be positive");
            }
            n *= static_cast<std::size_t>(d);
        }
        data.assign(n, 0.0);
    }

    std::size_t size() const { return data.size(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    double* begin_ptr() { return data.data(); }
    const double* begin_ptr() const { return data.data(); }
};

// Named handle onto a parameter tensor and its gradient accumulator; the
// model exposes a flat list of these for the optimizer, checkpoints and
// gradient tests.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

inline void init_he_normal(Rng& rng, Tensor& t, int fan_in) {
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data) {
        v = rng.normal(0.0, sd);
    }
}

inline void init_uniform(Rng& rng, Tensor& t, double bound) {
    for (double& v : t.data) {
        v = rng.uniform(-bound, bound);
    }
}

}  // namespace vsynth::nn
