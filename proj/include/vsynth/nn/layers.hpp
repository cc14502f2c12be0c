#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/nn/tensor.hpp"
#include "vsynth/rng.hpp"

namespace vsynth::nn {

// Spatiotemporal extent of an activation volume (channel count is tracked
// separately by each layer).
struct Shape3 {
    int t = 0;
    int h = 0;
    int w = 0;

    std::size_t volume() const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    bool operator==(const Shape3& o) const { return t == o.t && h == o.h && w == o.w; }
};

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// 3-D convolution, kernel 3x3x3, zero padding 1, configurable stride.
// Weight layout [out_ch, in_ch, 3, 3, 3]; activations [ch, t, h, w].
// ---------------------------------------------------------------------------
class Conv3d {
public:
    Conv3d(int in_ch, int out_ch, int stride_t, int stride_s)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          st_(stride_t),
          ss_(stride_s),
          weight(Tensor({out_ch, in_ch, 3, 3, 3})),
          bias(Tensor({out_ch})),
          weight_grad(Tensor({out_ch, in_ch, 3, 3, 3})),
          bias_grad(Tensor({out_ch})) {
        if (in_ch <= 0 || out_ch <= 0 || stride_t <= 0 || stride_s <= 0) {
            throw ParamError("convolution channels and strides must be positive");
        }
    }

    void init(Rng& rng) {
        init_he_normal(rng, weight, in_ch_ * 27);
        bias.zero();
    }

    Shape3 out_shape(Shape3 in) const {
        return {(in.t - 1) / st_ + 1, (in.h - 1) / ss_ + 1, (in.w - 1) / ss_ + 1};
    }

    std::vector<double> forward(const std::vector<double>& in, Shape3 in_shape) {
        in_cache_ = in;
        in_shape_ = in_shape;
        out_shape_ = out_shape(in_shape);
        const int Ti = in_shape.t, Hi = in_shape.h, Wi = in_shape.w;
        const int To = out_shape_.t, Ho = out_shape_.h, Wo = out_shape_.w;
        std::vector<double> out(static_cast<std::size_t>(out_ch_) * out_shape_.volume());
        const double* w = weight.data.data();
        for (int oc = 0; oc < out_ch_; ++oc) {
            const double b = bias.data[static_cast<std::size_t>(oc)];
            for (int ot = 0; ot < To; ++ot) {
                const int t0 = ot * st_ - 1;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int y0 = oy * ss_ - 1;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int x0 = ox * ss_ - 1;
                        double acc = b;
                        for (int ic = 0; ic < in_ch_; ++ic) {
                            const double* wb = w + (static_cast<std::size_t>(oc) * in_ch_ + ic) * 27;
                            const double* ib =
                                in.data() + static_cast<std::size_t>(ic) * in_shape.volume();
                            for (int kt = 0; kt < 3; ++kt) {
                                const int it = t0 + kt;
                                if (it < 0 || it >= Ti) continue;
                                for (int ky = 0; ky < 3; ++ky) {
                                    const int iy = y0 + ky;
                                    if (iy < 0 || iy >= Hi) continue;
                                    for (int kx = 0; kx < 3; ++kx) {
                                        const int ix = x0 + kx;
                                        if (ix < 0 || ix >= Wi) continue;
                                        acc += ib[(static_cast<std::size_t>(it) * Hi + iy) * Wi +
                                                  ix] *
                                               wb[(kt * 3 + ky) * 3 + kx];
                                    }
                                }
                            }
                        }
                        out[((static_cast<std::size_t>(oc) * To + ot) * Ho + oy) * Wo + ox] = acc;
                    }
                }
            }
        }
        return out;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        const int Ti = in_shape_.t, Hi = in_shape_.h, Wi = in_shape_.w;
        const int To = out_shape_.t, Ho = out_shape_.h, Wo = out_shape_.w;
        std::vector<double> din(in_cache_.size(), 0.0);
        const double* w = weight.data.data();
        for (int oc = 0; oc < out_ch_; ++oc) {
            double bacc = 0.0;
            for (int ot = 0; ot < To; ++ot) {
                const int t0 = ot * st_ - 1;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int y0 = oy * ss_ - 1;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int x0 = ox * ss_ - 1;
                        const double g =
                            dout[((static_cast<std::size_t>(oc) * To + ot) * Ho + oy) * Wo + ox];
                        bacc += g;
                        for (int ic = 0; ic < in_ch_; ++ic) {
                            const std::size_t woff =
                                (static_cast<std::size_t>(oc) * in_ch_ + ic) * 27;
                            const double* ib =
                                in_cache_.data() + static_cast<std::size_t>(ic) * in_shape_.volume();
                            double* dib =
                                din.data() + static_cast<std::size_t>(ic) * in_shape_.volume();
                            for (int kt = 0; kt < 3; ++kt) {
                                const int it = t0 + kt;
                                if (it < 0 || it >= Ti) continue;
                                for (int ky = 0; ky < 3; ++ky) {
                                    const int iy = y0 + ky;
                                    if (iy < 0 || iy >= Hi) continue;
                                    for (int kx = 0; kx < 3; ++kx) {
                                        const int ix = x0 + kx;
                                        if (ix < 0 || ix >= Wi) continue;
                                        const std::size_t ii =
                                            (static_cast<std::size_t>(it) * Hi + iy) * Wi + ix;
                                        weight_grad.data[woff + (kt * 3 + ky) * 3 + kx] +=
                                            ib[ii] * g;
                                        dib[ii] += w[woff + (kt * 3 + ky) * 3 + kx] * g;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            bias_grad.data[static_cast<std::size_t>(oc)] += bacc;
        }
        return din;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        out.push_back({prefix + ".weight", &weight, &weight_grad});
        out.push_back({prefix + ".bias", &bias, &bias_grad});
    }

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

    Tensor weight, bias, weight_grad, bias_grad;

private:
    int in_ch_, out_ch_, st_, ss_;
    std::vector<double> in_cache_;
    Shape3 in_shape_{}, out_shape_{};
};

// ---------------------------------------------------------------------------
// Transposed 3-D convolution, kernel 3, padding 1, output padding stride-1,
// so each output extent is exactly input extent times stride.
// Weight layout [in_ch, out_ch, 3, 3, 3].
// ---------------------------------------------------------------------------
class ConvTranspose3d {
public:
    ConvTranspose3d(int in_ch, int out_ch, int stride_t, int stride_s)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          st_(stride_t),
          ss_(stride_s),
          weight(Tensor({in_ch, out_ch, 3, 3, 3})),
          bias(Tensor({out_ch})),
          weight_grad(Tensor({in_ch, out_ch, 3, 3, 3})),
          bias_grad(Tensor({out_ch})) {
        if (in_ch <= 0 || out_ch <= 0 || stride_t <= 0 || stride_s <= 0) {
            throw ParamError("convolution channels and strides must be positive");
        }
    }

    void init(Rng& rng) {
        init_he_normal(rng, weight, in_ch_ * 27);
        bias.zero();
    }

    Shape3 out_shape(Shape3 in) const { return {in.t * st_, in.h * ss_, in.w * ss_}; }

    std::vector<double> forward(const std::vector<double>& in, Shape3 in_shape) {
        in_cache_ = in;
        in_shape_ = in_shape;
        out_shape_ = out_shape(in_shape);
        const int Ti = in_shape.t, Hi = in_shape.h, Wi = in_shape.w;
        const int To = out_shape_.t, Ho = out_shape_.h, Wo = out_shape_.w;
        std::vector<double> out(static_cast<std::size_t>(out_ch_) * out_shape_.volume());
        for (int oc = 0; oc < out_ch_; ++oc) {
            std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(
                                          static_cast<std::size_t>(oc) * out_shape_.volume()),
                        out_shape_.volume(), bias.data[static_cast<std::size_t>(oc)]);
        }
        const double* w = weight.data.data();
        for (int ic = 0; ic < in_ch_; ++ic) {
            const double* ib = in.data() + static_cast<std::size_t>(ic) * in_shape.volume();
            for (int t = 0; t < Ti; ++t) {
                for (int y = 0; y < Hi; ++y) {
                    for (int x = 0; x < Wi; ++x) {
                        const double v = ib[(static_cast<std::size_t>(t) * Hi + y) * Wi + x];
                        if (v == 0.0) continue;
                        for (int oc = 0; oc < out_ch_; ++oc) {
                            const double* wb =
                                w + (static_cast<std::size_t>(ic) * out_ch_ + oc) * 27;
                            double* ob =
                                out.data() + static_cast<std::size_t>(oc) * out_shape_.volume();
                            for (int kt = 0; kt < 3; ++kt) {
                                const int ot = t * st_ - 1 + kt;
                                if (ot < 0 || ot >= To) continue;
                                for (int ky = 0; ky < 3; ++ky) {
                                    const int oy = y * ss_ - 1 + ky;
                                    if (oy < 0 || oy >= Ho) continue;
                                    for (int kx = 0; kx < 3; ++kx) {
                                        const int ox = x * ss_ - 1 + kx;
                                        if (ox < 0 || ox >= Wo) continue;
                                        ob[(static_cast<std::size_t>(ot) * Ho + oy) * Wo + ox] +=
                                            v * wb[(kt * 3 + ky) * 3 + kx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        return out;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        const int Ti = in_shape_.t, Hi = in_shape_.h, Wi = in_shape_.w;
        const int To = out_shape_.t, Ho = out_shape_.h, Wo = out_shape_.w;
        std::vector<double> din(in_cache_.size(), 0.0);
        const double* w = weight.data.data();
        for (int oc = 0; oc < out_ch_; ++oc) {
            const double* db = dout.data() + static_cast<std::size_t>(oc) * out_shape_.volume();
            double bacc = 0.0;
            for (std::size_t i = 0; i < out_shape_.volume(); ++i) {
                bacc += db[i];
            }
            bias_grad.data[static_cast<std::size_t>(oc)] += bacc;
        }
        for (int ic = 0; ic < in_ch_; ++ic) {
            const double* ib = in_cache_.data() + static_cast<std::size_t>(ic) * in_shape_.volume();
            double* dib = din.data() + static_cast<std::size_t>(ic) * in_shape_.volume();
            for (int t = 0; t < Ti; ++t) {
                for (int y = 0; y < Hi; ++y) {
                    for (int x = 0; x < Wi; ++x) {
                        const std::size_t ii = (static_cast<std::size_t>(t) * Hi + y) * Wi + x;
                        const double v = ib[ii];
                        double acc = 0.0;
                        for (int oc = 0; oc < out_ch_; ++oc) {
                            const std::size_t woff =
                                (static_cast<std::size_t>(ic) * out_ch_ + oc) * 27;
                            const double* db =
                                dout.data() + static_cast<std::size_t>(oc) * out_shape_.volume();
                            for (int kt = 0; kt < 3; ++kt) {
                                const int ot = t * st_ - 1 + kt;
                                if (ot < 0 || ot >= To) continue;
                                for (int ky = 0; ky < 3; ++ky) {
                                    const int oy = y * ss_ - 1 + ky;
                                    if (oy < 0 || oy >= Ho) continue;
                                    for (int kx = 0; kx < 3; ++kx) {
                                        const int ox = x * ss_ - 1 + kx;
                                        if (ox < 0 || ox >= Wo) continue;
                                        const double g =
                                            db[(static_cast<std::size_t>(ot) * Ho + oy) * Wo + ox];
                                        weight_grad.data[woff + (kt * 3 + ky) * 3 + kx] += v * g;
                                        acc += w[woff + (kt * 3 + ky) * 3 + kx] * g;
                                    }
                                }
                            }
                        }
                        dib[ii] += acc;
                    }
                }
            }
        }
        return din;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        out.push_back({prefix + ".weight", &weight, &weight_grad});
        out.push_back({prefix + ".bias", &bias, &bias_grad});
    }

    Tensor weight, bias, weight_grad, bias_grad;

private:
    int in_ch_, out_ch_, st_, ss_;
    std::vector<double> in_cache_;
    Shape3 in_shape_{}, out_shape_{};
};

// ---------------------------------------------------------------------------
// Per-channel batch normalization over the (t, h, w) extent of one sample.
// Training mode normalizes with the current statistics and maintains running
// statistics (momentum 0.1, unbiased variance in the running buffer);
// inference mode uses the running statistics.
// ---------------------------------------------------------------------------
class BatchNorm3d {
public:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

    explicit BatchNorm3d(int channels)
        : channels_(channels),
          gamma(Tensor({channels})),
          beta(Tensor({channels})),
          gamma_grad(Tensor({channels})),
          beta_grad(Tensor({channels})),
          running_mean(Tensor({channels})),
          running_var(Tensor({channels})) {
        std::fill(gamma.data.begin(), gamma.data.end(), 1.0);
        std::fill(running_var.data.begin(), running_var.data.end(), 1.0);
    }

    std::vector<double> forward(const std::vector<double>& in, Shape3 shape, bool training,
                                bool update_stats = true) {
        shape_ = shape;
        training_ = training;
        const std::size_t n = shape.volume();
        if (n < 2 && training) {
            throw ParamError("batch normalization needs at least 2 values per channel");
        }
        std::vector<double> out(in.size());
        if (training) {
            in_cache_ = in;
            mean_.assign(static_cast<std::size_t>(channels_), 0.0);
            var_.assign(static_cast<std::size_t>(channels_), 0.0);
            xhat_.resize(in.size());
            for (int c = 0; c < channels_; ++c) {
                const double* x = in.data() + static_cast<std::size_t>(c) * n;
                double mu = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    mu += x[i];
                }
                mu /= static_cast<double>(n);
                double var = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = x[i] - mu;
                    var += d * d;
                }
                var /= static_cast<double>(n);
                mean_[static_cast<std::size_t>(c)] = mu;
                var_[static_cast<std::size_t>(c)] = var;
                const double inv = 1.0 / std::sqrt(var + kEps);
                const double g = gamma.data[static_cast<std::size_t>(c)];
                const double b = beta.data[static_cast<std::size_t>(c)];
                double* xh = xhat_.data() + static_cast<std::size_t>(c) * n;
                double* y = out.data() + static_cast<std::size_t>(c) * n;
                for (std::size_t i = 0; i < n; ++i) {
                    xh[i] = (x[i] - mu) * inv;
                    y[i] = g * xh[i] + b;
                }
                if (update_stats) {
                    const double unbiased = var * static_cast<double>(n) /
                                            static_cast<double>(n - 1);
                    running_mean.data[static_cast<std::size_t>(c)] =
                        (1.0 - kMomentum) * running_mean.data[static_cast<std::size_t>(c)] +
                        kMomentum * mu;
                    running_var.data[static_cast<std::size_t>(c)] =
                        (1.0 - kMomentum) * running_var.data[static_cast<std::size_t>(c)] +
                        kMomentum * unbiased;
                }
            }
        } else {
            for (int c = 0; c < channels_; ++c) {
                const double* x = in.data() + static_cast<std::size_t>(c) * n;
                double* y = out.data() + static_cast<std::size_t>(c) * n;
                const double inv =
                    1.0 / std::sqrt(running_var.data[static_cast<std::size_t>(c)] + kEps);
                const double g = gamma.data[static_cast<std::size_t>(c)];
                const double b = beta.data[static_cast<std::size_t>(c)];
                const double mu = running_mean.data[static_cast<std::size_t>(c)];
                for (std::size_t i = 0; i < n; ++i) {
                    y[i] = g * (x[i] - mu) * inv + b;
                }
            }
        }
        return out;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        if (!training_) {
            throw ParamError("batch normalization backward requires a training-mode forward");
        }
        const std::size_t n = shape_.volume();
        std::vector<double> din(dout.size());
        for (int c = 0; c < channels_; ++c) {
            const double* dy = dout.data() + static_cast<std::size_t>(c) * n;
            const double* xh = xhat_.data() + static_cast<std::size_t>(c) * n;
            const double g = gamma.data[static_cast<std::size_t>(c)];
            const double inv = 1.0 / std::sqrt(var_[static_cast<std::size_t>(c)] + kEps);
            double sum_dy = 0.0;
            double sum_dy_xhat = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xh[i];
            }
            gamma_grad.data[static_cast<std::size_t>(c)] += sum_dy_xhat;
            beta_grad.data[static_cast<std::size_t>(c)] += sum_dy;
            double* dx = din.data() + static_cast<std::size_t>(c) * n;
            const double scale = g * inv / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                dx[i] = scale * (static_cast<double>(n) * dy[i] - sum_dy - xh[i] * sum_dy_xhat);
            }
        }
        return din;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        out.push_back({prefix + ".gamma", &gamma, &gamma_grad});
        out.push_back({prefix + ".beta", &beta, &beta_grad});
    }

    Tensor gamma, beta, gamma_grad, beta_grad;
    Tensor running_mean, running_var;  // inference-time statistics, not trained

private:
    int channels_;
    bool training_ = false;
    Shape3 shape_{};
    std::vector<double> in_cache_, xhat_, mean_, var_;
};

// ---------------------------------------------------------------------------
// ReLU and inverted dropout.
// ---------------------------------------------------------------------------
class Relu {
public:
    std::vector<double> forward(const std::vector<double>& in) {
        out_cache_.resize(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            out_cache_[i] = in[i] > 0.0 ? in[i] : 0.0;
        }
        return out_cache_;
    }
    std::vector<double> backward(const std::vector<double>& dout) {
        std::vector<double> din(dout.size());
        for (std::size_t i = 0; i < dout.size(); ++i) {
            din[i] = out_cache_[i] > 0.0 ? dout[i] : 0.0;
        }
        return din;
    }

private:
    std::vector<double> out_cache_;
};

class Dropout {
public:
    explicit Dropout(double rate) : rate_(rate) {
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw ParamError("dropout rate must be in [0, 1)");
        }
    }

    std::vector<double> forward(const std::vector<double>& in, bool training, Rng& rng) {
        if (!training || rate_ == 0.0) {
            active_ = false;
            return in;
        }
        active_ = true;
        const double keep = 1.0 - rate_;
        mask_.resize(in.size());
        std::vector<double> out(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            const bool kept = rng.uniform() >= rate_;
            mask_[i] = kept ? 1 : 0;
            out[i] = kept ? in[i] / keep : 0.0;
        }
        return out;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        if (!active_) {
            return dout;
        }
        const double keep = 1.0 - rate_;
        std::vector<double> din(dout.size());
        for (std::size_t i = 0; i < dout.size(); ++i) {
            din[i] = mask_[i] != 0 ? dout[i] / keep : 0.0;
        }
        return din;
    }

    double rate() const { return rate_; }

private:
    double rate_;
    bool active_ = false;
    std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Fully connected layer applied independently to each row of a [rows, in]
// matrix. Weight layout [out, in].
// ---------------------------------------------------------------------------
class Linear {
public:
    Linear(int in_features, int out_features)
        : in_(in_features),
          out_(out_features),
          weight(Tensor({out_features, in_features})),
          bias(Tensor({out_features})),
          weight_grad(Tensor({out_features, in_features})),
          bias_grad(Tensor({out_features})) {
        if (in_features <= 0 || out_features <= 0) {
            throw ParamError("linear layer sizes must be positive");
        }
    }

    void init(Rng& rng) {
        init_he_normal(rng, weight, in_);
        bias.zero();
    }

    std::vector<double> forward(const std::vector<double>& in, int rows) {
        if (in.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(in_)) {
            throw ParamError("linear input size mismatch");
        }
        in_cache_ = in;
        rows_ = rows;
        std::vector<double> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(out_));
        for (int r = 0; r < rows; ++r) {
            const double* x = in.data() + static_cast<std::size_t>(r) * in_;
            double* y = out.data() + static_cast<std::size_t>(r) * out_;
            for (int o = 0; o < out_; ++o) {
                const double* wr = weight.data.data() + static_cast<std::size_t>(o) * in_;
                double acc = bias.data[static_cast<std::size_t>(o)];
                for (int i = 0; i < in_; ++i) {
                    acc += wr[i] * x[i];
                }
                y[o] = acc;
            }
        }
        return out;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        std::vector<double> din(in_cache_.size(), 0.0);
        for (int r = 0; r < rows_; ++r) {
            const double* x = in_cache_.data() + static_cast<std::size_t>(r) * in_;
            const double* dy = dout.data() + static_cast<std::size_t>(r) * out_;
            double* dx = din.data() + static_cast<std::size_t>(r) * in_;
            for (int o = 0; o < out_; ++o) {
                const double g = dy[o];
                double* wg = weight_grad.data.data() + static_cast<std::size_t>(o) * in_;
                const double* wr = weight.data.data() + static_cast<std::size_t>(o) * in_;
                bias_grad.data[static_cast<std::size_t>(o)] += g;
                for (int i = 0; i < in_; ++i) {
                    wg[i] += x[i] * g;
                    dx[i] += wr[i] * g;
                }
            }
        }
        return din;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        out.push_back({prefix + ".weight", &weight, &weight_grad});
        out.push_back({prefix + ".bias", &bias, &bias_grad});
    }

    int in_features() const { return in_; }
    int out_features() const { return out_; }

    Tensor weight, bias, weight_grad, bias_grad;

private:
    int in_, out_;
    int rows_ = 0;
    std::vector<double> in_cache_;
};

// ---------------------------------------------------------------------------
// Single-direction long short-term memory layer over a [T, in] sequence.
// Gates are packed (input, forget, cell, output); the forget-gate bias is
// initialized to 1 so early training does not immediately erase state.
// ---------------------------------------------------------------------------
class Lstm {
public:
    Lstm(int in_features, int hidden)
        : in_(in_features),
          hidden_(hidden),
          w_ih(Tensor({4 * hidden, in_features})),
          w_hh(Tensor({4 * hidden, hidden})),
          b_ih(Tensor({4 * hidden})),
          b_hh(Tensor({4 * hidden})),
          w_ih_grad(Tensor({4 * hidden, in_features})),
          w_hh_grad(Tensor({4 * hidden, hidden})),
          b_ih_grad(Tensor({4 * hidden})),
          b_hh_grad(Tensor({4 * hidden})) {
        if (in_features <= 0 || hidden <= 0) {
            throw ParamError("recurrent layer sizes must be positive");
        }
    }

    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
        init_uniform(rng, w_ih, bound);
        init_uniform(rng, w_hh, bound);
        b_ih.zero();
        b_hh.zero();
        for (int i = 0; i < hidden_; ++i) {
            b_ih.data[static_cast<std::size_t>(hidden_ + i)] = 1.0;  // forget gate
        }
    }

    // Returns hidden states [T, hidden].
    std::vector<double> forward(const std::vector<double>& in, int steps) {
        if (in.size() != static_cast<std::size_t>(steps) * static_cast<std::size_t>(in_)) {
            throw ParamError("recurrent input size mismatch");
        }
        steps_ = steps;
        in_cache_ = in;
        const int H = hidden_;
        gates_.assign(static_cast<std::size_t>(steps) * 4 * H, 0.0);
        cells_.assign(static_cast<std::size_t>(steps) * H, 0.0);
        tanh_cells_.assign(static_cast<std::size_t>(steps) * H, 0.0);
        hidden_states_.assign(static_cast<std::size_t>(steps) * H, 0.0);
        std::vector<double> h_prev(static_cast<std::size_t>(H), 0.0);
        std::vector<double> c_prev(static_cast<std::size_t>(H), 0.0);
        for (int t = 0; t < steps; ++t) {
            const double* x = in.data() + static_cast<std::size_t>(t) * in_;
            double* gate = gates_.data() + static_cast<std::size_t>(t) * 4 * H;
            for (int j = 0; j < 4 * H; ++j) {
                const double* wi = w_ih.data.data() + static_cast<std::size_t>(j) * in_;
                const double* wh = w_hh.data.data() + static_cast<std::size_t>(j) * H;
                double acc = b_ih.data[static_cast<std::size_t>(j)] +
                             b_hh.data[static_cast<std::size_t>(j)];
                for (int i = 0; i < in_; ++i) {
                    acc += wi[i] * x[i];
                }
                for (int i = 0; i < H; ++i) {
                    acc += wh[i] * h_prev[static_cast<std::size_t>(i)];
                }
                gate[j] = acc;
            }
            double* c = cells_.data() + static_cast<std::size_t>(t) * H;
            double* tc = tanh_cells_.data() + static_cast<std::size_t>(t) * H;
            double* h = hidden_states_.data() + static_cast<std::size_t>(t) * H;
            for (int i = 0; i < H; ++i) {
                const double gi = sigmoid(gate[i]);
                const double gf = sigmoid(gate[H + i]);
                const double gg = std::tanh(gate[2 * H + i]);
                const double go = sigmoid(gate[3 * H + i]);
                gate[i] = gi;
                gate[H + i] = gf;
                gate[2 * H + i] = gg;
                gate[3 * H + i] = go;
                c[i] = gf * c_prev[static_cast<std::size_t>(i)] + gi * gg;
                tc[i] = std::tanh(c[i]);
                h[i] = go * tc[i];
            }
            std::copy(c, c + H, c_prev.begin());
            std::copy(h, h + H, h_prev.begin());
        }
        return hidden_states_;
    }

    // dout is [T, hidden]; returns [T, in].
    std::vector<double> backward(const std::vector<double>& dout) {
        const int H = hidden_;
        std::vector<double> din(static_cast<std::size_t>(steps_) * in_, 0.0);
        std::vector<double> dh(static_cast<std::size_t>(H), 0.0);
        std::vector<double> dc(static_cast<std::size_t>(H), 0.0);
        std::vector<double> dz(static_cast<std::size_t>(4 * H), 0.0);
        for (int t = steps_ - 1; t >= 0; --t) {
            const double* gate = gates_.data() + static_cast<std::size_t>(t) * 4 * H;
            const double* tc = tanh_cells_.data() + static_cast<std::size_t>(t) * H;
            const double* c_prev =
                t > 0 ? cells_.data() + static_cast<std::size_t>(t - 1) * H : nullptr;
            const double* h_prev =
                t > 0 ? hidden_states_.data() + static_cast<std::size_t>(t - 1) * H : nullptr;
            const double* x = in_cache_.data() + static_cast<std::size_t>(t) * in_;
            for (int i = 0; i < H; ++i) {
                const double gi = gate[i];
                const double gf = gate[H + i];
                const double gg = gate[2 * H + i];
                const double go = gate[3 * H + i];
                const double dh_total =
                    dh[static_cast<std::size_t>(i)] +
                    dout[static_cast<std::size_t>(t) * H + static_cast<std::size_t>(i)];
                const double dc_total = dc[static_cast<std::size_t>(i)] +
                                        dh_total * go * (1.0 - tc[i] * tc[i]);
                const double cprev_i = t > 0 ? c_prev[i] : 0.0;
                dz[static_cast<std::size_t>(i)] = dc_total * gg * gi * (1.0 - gi);
                dz[static_cast<std::size_t>(H + i)] = dc_total * cprev_i * gf * (1.0 - gf);
                dz[static_cast<std::size_t>(2 * H + i)] = dc_total * gi * (1.0 - gg * gg);
                dz[static_cast<std::size_t>(3 * H + i)] = dh_total * tc[i] * go * (1.0 - go);
                dc[static_cast<std::size_t>(i)] = dc_total * gf;
            }
            std::fill(dh.begin(), dh.end(), 0.0);
            double* dx = din.data() + static_cast<std::size_t>(t) * in_;
            for (int j = 0; j < 4 * H; ++j) {
                const double g = dz[static_cast<std::size_t>(j)];
                if (g == 0.0) continue;
                b_ih_grad.data[static_cast<std::size_t>(j)] += g;
                b_hh_grad.data[static_cast<std::size_t>(j)] += g;
                double* wig = w_ih_grad.data.data() + static_cast<std::size_t>(j) * in_;
                const double* wi = w_ih.data.data() + static_cast<std::size_t>(j) * in_;
                for (int i = 0; i < in_; ++i) {
                    wig[i] += g * x[i];
                    dx[i] += wi[i] * g;
                }
                double* whg = w_hh_grad.data.data() + static_cast<std::size_t>(j) * H;
                const double* wh = w_hh.data.data() + static_cast<std::size_t>(j) * H;
                if (t > 0) {
                    for (int i = 0; i < H; ++i) {
                        whg[i] += g * h_prev[i];
                        dh[static_cast<std::size_t>(i)] += wh[i] * g;
                    }
                }
            }
        }
        return din;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        out.push_back({prefix + ".w_ih", &w_ih, &w_ih_grad});
        out.push_back({prefix + ".w_hh", &w_hh, &w_hh_grad});
        out.push_back({prefix + ".b_ih", &b_ih, &b_ih_grad});
        out.push_back({prefix + ".b_hh", &b_hh, &b_hh_grad});
    }

    int hidden() const { return hidden_; }
    int in_features() const { return in_; }

    Tensor w_ih, w_hh, b_ih, b_hh;
    Tensor w_ih_grad, w_hh_grad, b_ih_grad, b_hh_grad;

private:
    int in_, hidden_;
    int steps_ = 0;
    std::vector<double> in_cache_, gates_, cells_, tanh_cells_, hidden_states_;
};

// ---------------------------------------------------------------------------
// Bidirectional wrapper: forward-direction output and reversed-input,
// re-reversed backward-direction output concatenated per step to [T, 2H].
// ---------------------------------------------------------------------------
class BiLstm {
public:
    BiLstm(int in_features, int hidden) : fwd_(in_features, hidden), bwd_(in_features, hidden) {}

    void init(Rng& rng) {
        fwd_.init(rng);
        bwd_.init(rng);
    }

    std::vector<double> forward(const std::vector<double>& in, int steps) {
        steps_ = steps;
        const int in_f = fwd_.in_features();
        std::vector<double> reversed(in.size());
        for (int t = 0; t < steps; ++t) {
            std::copy(in.begin() + static_cast<std::ptrdiff_t>(
                                       static_cast<std::size_t>(steps - 1 - t) * in_f),
                      in.begin() + static_cast<std::ptrdiff_t>(
                                       static_cast<std::size_t>(steps - t) * in_f),
                      reversed.begin() +
                          static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * in_f));
        }
        const std::vector<double> hf = fwd_.forward(in, steps);
        const std::vector<double> hb = bwd_.forward(reversed, steps);
        const int H = fwd_.hidden();
        std::vector<double> out(static_cast<std::size_t>(steps) * 2 * H);
        for (int t = 0; t < steps; ++t) {
            std::copy(hf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * H),
                      hf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t + 1) * H),
                      out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * 2 * H));
            const int rt = steps - 1 - t;
            std::copy(hb.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(rt) * H),
                      hb.begin() +
                          static_cast<std::ptrdiff_t>(static_cast<std::size_t>(rt + 1) * H),
                      out.begin() +
                          static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * 2 * H + H));
        }
        return out;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        const int H = fwd_.hidden();
        const int in_f = fwd_.in_features();
        std::vector<double> df(static_cast<std::size_t>(steps_) * H);
        std::vector<double> db(static_cast<std::size_t>(steps_) * H);
        for (int t = 0; t < steps_; ++t) {
            for (int i = 0; i < H; ++i) {
                df[static_cast<std::size_t>(t) * H + i] =
                    dout[static_cast<std::size_t>(t) * 2 * H + i];
                const int rt = steps_ - 1 - t;
                db[static_cast<std::size_t>(rt) * H + i] =
                    dout[static_cast<std::size_t>(t) * 2 * H + H + i];
            }
        }
        const std::vector<double> dxf = fwd_.backward(df);
        const std::vector<double> dxb_rev = bwd_.backward(db);
        std::vector<double> din(static_cast<std::size_t>(steps_) * in_f);
        for (int t = 0; t < steps_; ++t) {
            const int rt = steps_ - 1 - t;
            for (int i = 0; i < in_f; ++i) {
                din[static_cast<std::size_t>(t) * in_f + i] =
                    dxf[static_cast<std::size_t>(t) * in_f + i] +
                    dxb_rev[static_cast<std::size_t>(rt) * in_f + i];
            }
        }
        return din;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        fwd_.collect(prefix + ".fwd", out);
        bwd_.collect(prefix + ".bwd", out);
    }

    int hidden() const { return fwd_.hidden(); }
    int out_features() const { return 2 * fwd_.hidden(); }

private:
    Lstm fwd_, bwd_;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Nearest-neighbor temporal expansion of per-step values back to per-frame
// values: out[t] = in[t / factor].
// ---------------------------------------------------------------------------
inline std::vector<double> upsample_nearest(const std::vector<double>& in, int factor,
                                            std::size_t step_size = 1) {
    if (factor <= 0) {
        throw ParamError("upsample factor must be positive");
    }
    const std::size_t steps = in.size() / step_size;
    std::vector<double> out(in.size() * static_cast<std::size_t>(factor));
    for (std::size_t t = 0; t < steps * static_cast<std::size_t>(factor); ++t) {
        const std::size_t src = t / static_cast<std::size_t>(factor);
        std::copy(in.begin() + static_cast<std::ptrdiff_t>(src * step_size),
                  in.begin() + static_cast<std::ptrdiff_t>((src + 1) * step_size),
                  out.begin() + static_cast<std::ptrdiff_t>(t * step_size));
    }
    return out;
}

inline std::vector<double> upsample_nearest_backward(const std::vector<double>& dout, int factor,
                                                     std::size_t step_size = 1) {
    if (factor <= 0) {
        throw ParamError("upsample factor must be positive");
    }
    std::vector<double> din(dout.size() / static_cast<std::size_t>(factor), 0.0);
    const std::size_t steps_out = dout.size() / step_size;
    for (std::size_t t = 0; t < steps_out; ++t) {
        const std::size_t src = t / static_cast<std::size_t>(factor);
        for (std::size_t i = 0; i < step_size; ++i) {
            din[src * step_size + i] += dout[t * step_size + i];
        }
    }
    return din;
}

}  // namespace vsynth::nn
