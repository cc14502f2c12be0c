#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/dsp.hpp"
#include "vsynth/nn/layers.hpp"
#include "vsynth/nn/tensor.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/scene.hpp"

namespace vsynth::nn {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------
struct ModelConfig {
    // Canonical training clip dimensions. Forward also accepts other temporal
    // lengths that the encoder strides divide; height/width are fixed by the
    // decoder geometry.
    int input_t = 256;
    int input_h = 64;
    int input_w = 64;

    int encoder_blocks = 4;
    int encoder_channels = 16;
    int kernel = 3;  // only 3 is supported
    std::vector<int> temporal_strides = {2, 2, 1, 1};
    std::vector<int> spatial_strides = {2, 2, 2, 2};

    int lstm_layers = 1;
    int lstm_hidden = 64;
    bool bidirectional = true;

    std::vector<int> signal_head_widths = {32, 8, 1};

    int decoder_blocks = 4;  // each block doubles height and width
    int decoder_channels = 8;

    double dropout = 0.1;

    double w_sig_local = 1.0;
    double w_sig_global = 1.0;
    double w_roi_local = 1.0;
    double w_roi_global = 1.0;

    double learning_rate = 0.02;
    double momentum = 0.9;
    double grad_clip = 5.0;
    int batch_size = 1;

    std::uint64_t seed = 1;  // parameter init and dropout stream

    int temporal_factor() const {
        int f = 1;
        for (int s : temporal_strides) {
            f *= s;
        }
        return f;
    }

    int spatial_factor() const {
        int f = 1;
        for (int s : spatial_strides) {
            f *= s;
        }
        return f;
    }

    Shape3 embedding_shape() const {
        return {input_t / temporal_factor(), input_h / spatial_factor(),
                input_w / spatial_factor()};
    }

    int aggregator_out() const { return bidirectional ? 2 * lstm_hidden : lstm_hidden; }

    void validate() const {
        if (kernel != 3) {
            throw ParamError("only kernel size 3 is supported");
        }
        if (input_t < 2 || input_h < 2 || input_w < 2) {
            throw ParamError("input dimensions must be at least 2");
        }
        if (encoder_blocks < 1 || encoder_channels < 1) {
            throw ParamError("encoder needs at least one block and one channel");
        }
        if (static_cast<int>(temporal_strides.size()) != encoder_blocks ||
            static_cast<int>(spatial_strides.size()) != encoder_blocks) {
            throw ParamError("stride lists must have one entry per encoder block");
        }
        int t = input_t, h = input_h, w = input_w;
        for (int b = 0; b < encoder_blocks; ++b) {
            const int st = temporal_strides[static_cast<std::size_t>(b)];
            const int ss = spatial_strides[static_cast<std::size_t>(b)];
            if (st < 1 || ss < 1) {
                throw ParamError("strides must be >= 1");
            }
            if (t % st != 0 || h % ss != 0 || w % ss != 0) {
                throw ParamError("encoder strides must divide the input dimensions");
            }
            t /= st;
            h /= ss;
            w /= ss;
        }
        if (t < 1 || h < 1 || w < 1) {
            throw ParamError("embedding dimensions collapsed to zero");
        }
        if (lstm_layers < 1 || lstm_hidden < 1) {
            throw ParamError("recurrent aggregator needs at least one layer and one unit");
        }
        if (signal_head_widths.empty() || signal_head_widths.back() != 1) {
            throw ParamError("signal head must end in a single unit");
        }
        for (int width : signal_head_widths) {
            if (width < 1) {
                throw ParamError("signal head widths must be positive");
            }
        }
        if (decoder_blocks < 1 || decoder_channels < 1) {
            throw ParamError("decoder needs at least one block and one channel");
        }
        int up = h;
        for (int b = 0; b < decoder_blocks; ++b) {
            up *= 2;
        }
        if (up != input_h || (input_h / h) != (input_w / w)) {
            throw ParamError("decoder blocks must upsample the embedding back to the input size");
        }
        if (!(dropout >= 0.0 && dropout < 1.0)) {
            throw ParamError("dropout must be in [0, 1)");
        }
        if (w_sig_local < 0.0 || w_sig_global < 0.0 || w_roi_local < 0.0 || w_roi_global < 0.0) {
            throw ParamError("loss weights must be non-negative");
        }
        if (w_sig_local + w_sig_global + w_roi_local + w_roi_global <= 0.0) {
            throw ParamError("at least one loss weight must be positive");
        }
        if (!(learning_rate > 0.0)) {
            throw ParamError("learning rate must be positive");
        }
        if (!(momentum >= 0.0 && momentum < 1.0)) {
            throw ParamError("momentum must be in [0, 1)");
        }
        if (grad_clip < 0.0) {
            throw ParamError("gradient clip must be non-negative");
        }
        if (batch_size < 1) {
            throw ParamError("batch size must be positive");
        }
    }
};

// Per-frame predictions from both temporal pathways. Probability maps are
// sigmoid outputs; the raw logits are retained for the numerically stable
// cross-entropy.
struct ModelOutput {
    std::vector<double> signal_local;
    std::vector<double> signal_global;
    std::vector<double> roi_local;
    std::vector<double> roi_global;
    std::vector<double> roi_local_logits;
    std::vector<double> roi_global_logits;
};

struct LossBreakdown {
    double total = 0.0;
    double sig_local = 0.0;
    double sig_global = 0.0;
    double roi_local = 0.0;
    double roi_global = 0.0;
};

namespace detail {

inline void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string("non-finite activation in ") + what);
        }
    }
}

// [C, T, H, W] channel-major to [T, C*H*W] time-major rows.
inline std::vector<double> to_time_major(const std::vector<double>& x, int channels,
                                         Shape3 shape) {
    const std::size_t hw = static_cast<std::size_t>(shape.h) * shape.w;
    const std::size_t features = static_cast<std::size_t>(channels) * hw;
    std::vector<double> out(static_cast<std::size_t>(shape.t) * features);
    for (int c = 0; c < channels; ++c) {
        for (int t = 0; t < shape.t; ++t) {
            const double* src = x.data() + (static_cast<std::size_t>(c) * shape.t + t) * hw;
            double* dst = out.data() + static_cast<std::size_t>(t) * features +
                          static_cast<std::size_t>(c) * hw;
            std::copy(src, src + hw, dst);
        }
    }
    return out;
}

inline std::vector<double> to_channel_major(const std::vector<double>& x, int channels,
                                            Shape3 shape) {
    const std::size_t hw = static_cast<std::size_t>(shape.h) * shape.w;
    const std::size_t features = static_cast<std::size_t>(channels) * hw;
    std::vector<double> out(static_cast<std::size_t>(shape.t) * features);
    for (int c = 0; c < channels; ++c) {
        for (int t = 0; t < shape.t; ++t) {
            const double* src = x.data() + static_cast<std::size_t>(t) * features +
                                static_cast<std::size_t>(c) * hw;
            double* dst = out.data() + (static_cast<std::size_t>(c) * shape.t + t) * hw;
            std::copy(src, src + hw, dst);
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Signal head: a stack of fully connected layers applied per timestep, with
// rectification between layers and a linear final unit.
// ---------------------------------------------------------------------------
class SignalHead {
public:
    SignalHead(int in_features, const std::vector<int>& widths) {
        int prev = in_features;
        for (int width : widths) {
            layers_.emplace_back(prev, width);
            prev = width;
        }
        relus_.resize(layers_.size() > 0 ? layers_.size() - 1 : 0);
    }

    void init(Rng& rng) {
        for (Linear& l : layers_) {
            l.init(rng);
        }
    }

    // in: [rows, in_features] -> [rows] scalars.
    std::vector<double> forward(const std::vector<double>& in, int rows) {
        std::vector<double> x = in;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            x = layers_[i].forward(x, rows);
            if (i + 1 < layers_.size()) {
                x = relus_[i].forward(x);
            }
        }
        return x;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        std::vector<double> g = dout;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            if (i + 1 < layers_.size()) {
                g = relus_[i].backward(g);
            }
            g = layers_[i].backward(g);
        }
        return g;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            layers_[i].collect(prefix + ".fc" + std::to_string(i), out);
        }
    }

private:
    std::vector<Linear> layers_;
    std::vector<Relu> relus_;
};

// ---------------------------------------------------------------------------
// Transposed-convolution decoder from the embedding grid to one full-resolution
// logit map per embedding step. All temporal growth is delegated to the
// nearest-neighbor re-expansion, so temporal stride is 1 throughout.
// ---------------------------------------------------------------------------
class RoiDecoder {
public:
    RoiDecoder(int in_channels, int mid_channels, int blocks, double dropout) {
        for (int b = 0; b < blocks; ++b) {
            const int ic = b == 0 ? in_channels : mid_channels;
            const int oc = b == blocks - 1 ? 1 : mid_channels;
            tconvs_.emplace_back(ic, oc, 1, 2);
            if (b + 1 < blocks) {
                relus_.emplace_back();
                bns_.emplace_back(oc);
                drops_.emplace_back(dropout);
            }
        }
    }

    void init(Rng& rng) {
        for (ConvTranspose3d& c : tconvs_) {
            c.init(rng);
        }
    }

    // in: [in_channels, shape] -> logits [1, shape.t, shape.h * 2^blocks, ...].
    std::vector<double> forward(const std::vector<double>& in, Shape3 shape, bool training,
                                Rng& rng, bool update_stats) {
        std::vector<double> x = in;
        Shape3 cur = shape;
        for (std::size_t b = 0; b < tconvs_.size(); ++b) {
            x = tconvs_[b].forward(x, cur);
            cur = tconvs_[b].out_shape(cur);
            if (b + 1 < tconvs_.size()) {
                x = relus_[b].forward(x);
                x = bns_[b].forward(x, cur, training, update_stats);
                x = drops_[b].forward(x, training, rng);
            }
        }
        return x;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        std::vector<double> g = dout;
        for (std::size_t b = tconvs_.size(); b-- > 0;) {
            if (b + 1 < tconvs_.size()) {
                g = drops_[b].backward(g);
                g = bns_[b].backward(g);
                g = relus_[b].backward(g);
            }
            g = tconvs_[b].backward(g);
        }
        return g;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        for (std::size_t b = 0; b < tconvs_.size(); ++b) {
            tconvs_[b].collect(prefix + ".block" + std::to_string(b) + ".tconv", out);
            if (b + 1 < tconvs_.size()) {
                bns_[b].collect(prefix + ".block" + std::to_string(b) + ".bn", out);
            }
        }
    }

    void collect_buffers(const std::string& prefix, std::vector<ParamRef>& out) {
        for (std::size_t b = 0; b + 1 < tconvs_.size(); ++b) {
            out.push_back({prefix + ".block" + std::to_string(b) + ".bn.running_mean",
                           &bns_[b].running_mean, nullptr});
            out.push_back({prefix + ".block" + std::to_string(b) + ".bn.running_var",
                           &bns_[b].running_var, nullptr});
        }
    }

private:
    std::vector<ConvTranspose3d> tconvs_;
    std::vector<Relu> relus_;
    std::vector<BatchNorm3d> bns_;
    std::vector<Dropout> drops_;
};

// ---------------------------------------------------------------------------
// Recurrent aggregator: stacked (optionally bidirectional) recurrent layers.
// ---------------------------------------------------------------------------
class Aggregator {
public:
    Aggregator(int in_features, int hidden, int layers, bool bidirectional)
        : bidirectional_(bidirectional) {
        int prev = in_features;
        for (int l = 0; l < layers; ++l) {
            if (bidirectional) {
                bi_.emplace_back(prev, hidden);
                prev = 2 * hidden;
            } else {
                uni_.emplace_back(prev, hidden);
                prev = hidden;
            }
        }
        out_features_ = prev;
    }

    void init(Rng& rng) {
        for (BiLstm& l : bi_) {
            l.init(rng);
        }
        for (Lstm& l : uni_) {
            l.init(rng);
        }
    }

    std::vector<double> forward(const std::vector<double>& in, int steps) {
        std::vector<double> x = in;
        if (bidirectional_) {
            for (BiLstm& l : bi_) {
                x = l.forward(x, steps);
            }
        } else {
            for (Lstm& l : uni_) {
                x = l.forward(x, steps);
            }
        }
        return x;
    }

    std::vector<double> backward(const std::vector<double>& dout) {
        std::vector<double> g = dout;
        if (bidirectional_) {
            for (std::size_t i = bi_.size(); i-- > 0;) {
                g = bi_[i].backward(g);
            }
        } else {
            for (std::size_t i = uni_.size(); i-- > 0;) {
                g = uni_[i].backward(g);
            }
        }
        return g;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        for (std::size_t i = 0; i < bi_.size(); ++i) {
            bi_[i].collect(prefix + ".layer" + std::to_string(i), out);
        }
        for (std::size_t i = 0; i < uni_.size(); ++i) {
            uni_[i].collect(prefix + ".layer" + std::to_string(i), out);
        }
    }

    int out_features() const { return out_features_; }

private:
    bool bidirectional_;
    std::vector<BiLstm> bi_;
    std::vector<Lstm> uni_;
    int out_features_ = 0;
};

// ---------------------------------------------------------------------------
// The model.
// ---------------------------------------------------------------------------
class VSignNet {
public:
    explicit VSignNet(const ModelConfig& cfg)
        : cfg_(validated(cfg)),
          emb_shape_(cfg_.embedding_shape()),
          local_head_(static_cast<int>(feature_count()), cfg_.signal_head_widths),
          global_head_(1, {1}),  // replaced below once aggregator size is known
          local_dec_(cfg_.encoder_channels, cfg_.decoder_channels, cfg_.decoder_blocks,
                     cfg_.dropout),
          global_dec_(cfg_.encoder_channels, cfg_.decoder_channels, cfg_.decoder_blocks,
                      cfg_.dropout),
          aggregator_(static_cast<int>(feature_count()), cfg_.lstm_hidden, cfg_.lstm_layers,
                      cfg_.bidirectional),
          global_seed_(1, 1),  // replaced below
          dropout_rng_(cfg_.seed + 1) {
        for (int b = 0; b < cfg_.encoder_blocks; ++b) {
            const int ic = b == 0 ? 1 : cfg_.encoder_channels;
            enc_conv_.emplace_back(ic, cfg_.encoder_channels,
                                   cfg_.temporal_strides[static_cast<std::size_t>(b)],
                                   cfg_.spatial_strides[static_cast<std::size_t>(b)]);
            enc_relu_.emplace_back();
            enc_bn_.emplace_back(cfg_.encoder_channels);
            enc_drop_.emplace_back(cfg_.dropout);
        }
        global_head_ = SignalHead(aggregator_.out_features(), cfg_.signal_head_widths);
        global_seed_ = Linear(aggregator_.out_features(), static_cast<int>(feature_count()));
        init_params();
    }

    static ModelConfig validated(ModelConfig cfg) {
        cfg.validate();
        return cfg;
    }

    const ModelConfig& config() const { return cfg_; }

    // Trainable parameters in a stable order (also the initialization order).
    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (std::size_t b = 0; b < enc_conv_.size(); ++b) {
            const std::string p = "encoder.block" + std::to_string(b);
            enc_conv_[b].collect(p + ".conv", out);
            enc_bn_[b].collect(p + ".bn", out);
        }
        local_head_.collect("local_head", out);
        local_dec_.collect("local_decoder", out);
        aggregator_.collect("lstm", out);
        global_seed_.collect("global_seed", out);
        global_head_.collect("global_head", out);
        global_dec_.collect("global_decoder", out);
        return out;
    }

    // Non-trained state that checkpoints must carry (normalization statistics).
    std::vector<ParamRef> buffers() {
        std::vector<ParamRef> out;
        for (std::size_t b = 0; b < enc_bn_.size(); ++b) {
            const std::string p = "encoder.block" + std::to_string(b) + ".bn";
            out.push_back({p + ".running_mean", &enc_bn_[b].running_mean, nullptr});
            out.push_back({p + ".running_var", &enc_bn_[b].running_var, nullptr});
        }
        local_dec_.collect_buffers("local_decoder", out);
        global_dec_.collect_buffers("global_decoder", out);
        return out;
    }

    void zero_grad() {
        for (ParamRef& p : params()) {
            p.grad->zero();
        }
    }

    void scale_grads(double factor) {
        for (ParamRef& p : params()) {
            for (double& g : p.grad->data) {
                g *= factor;
            }
        }
    }

    ModelOutput forward(const std::vector<float>& frames, int num_frames, bool training,
                        bool update_stats = true) {
        return run_forward(frames, num_frames, training, update_stats);
    }

    LossBreakdown loss(const ModelOutput& out, const VideoSample& gt) const {
        check_gt(gt, static_cast<int>(out.signal_local.size()));
        LossBreakdown lb;
        lb.sig_local = mse(out.signal_local, gt.gt_signal.values);
        lb.sig_global = mse(out.signal_global, gt.gt_signal.values);
        lb.roi_local = bce_logits(out.roi_local_logits, gt.gt_masks);
        lb.roi_global = bce_logits(out.roi_global_logits, gt.gt_masks);
        lb.total = cfg_.w_sig_local * lb.sig_local + cfg_.w_sig_global * lb.sig_global +
                   cfg_.w_roi_local * lb.roi_local + cfg_.w_roi_global * lb.roi_global;
        return lb;
    }

    // Forward, loss, and full backpropagation; gradients accumulate.
    LossBreakdown backward(const std::vector<float>& frames, const VideoSample& gt,
                           bool update_stats = true) {
        const int T = gt.num_frames;
        const ModelOutput out = run_forward(frames, T, /*training=*/true, update_stats);
        const LossBreakdown lb = loss(out, gt);

        const std::size_t plane = static_cast<std::size_t>(cfg_.input_h) * cfg_.input_w;
        const std::size_t n_pix = static_cast<std::size_t>(T) * plane;
        const int steps = T / cfg_.temporal_factor();
        const std::size_t features = feature_count();

        // Loss gradients with mean reduction.
        std::vector<double> d_sig_local(static_cast<std::size_t>(T));
        std::vector<double> d_sig_global(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
            const double gt_v = gt.gt_signal.values[static_cast<std::size_t>(t)];
            d_sig_local[static_cast<std::size_t>(t)] =
                cfg_.w_sig_local * 2.0 *
                (out.signal_local[static_cast<std::size_t>(t)] - gt_v) / static_cast<double>(T);
            d_sig_global[static_cast<std::size_t>(t)] =
                cfg_.w_sig_global * 2.0 *
                (out.signal_global[static_cast<std::size_t>(t)] - gt_v) / static_cast<double>(T);
        }
        std::vector<double> d_roi_local(n_pix);
        std::vector<double> d_roi_global(n_pix);
        for (std::size_t i = 0; i < n_pix; ++i) {
            const double y = gt.gt_masks[i] != 0 ? 1.0 : 0.0;
            d_roi_local[i] =
                cfg_.w_roi_local * (out.roi_local[i] - y) / static_cast<double>(n_pix);
            d_roi_global[i] =
                cfg_.w_roi_global * (out.roi_global[i] - y) / static_cast<double>(n_pix);
        }

        const int factor = cfg_.temporal_factor();

        // Local pathway heads.
        std::vector<double> d_emb_time(static_cast<std::size_t>(steps) * features, 0.0);
        {
            const std::vector<double> d_head = upsample_nearest_backward(d_sig_local, factor, 1);
            const std::vector<double> d_rows = local_head_.backward(d_head);
            for (std::size_t i = 0; i < d_emb_time.size(); ++i) {
                d_emb_time[i] += d_rows[i];
            }
        }
        std::vector<double> d_emb_channel(static_cast<std::size_t>(cfg_.encoder_channels) *
                                              emb_volume(steps),
                                          0.0);
        {
            const std::vector<double> d_logits =
                upsample_nearest_backward(d_roi_local, factor, plane);
            const std::vector<double> d_dec = local_dec_.backward(d_logits);
            for (std::size_t i = 0; i < d_emb_channel.size(); ++i) {
                d_emb_channel[i] += d_dec[i];
            }
        }

        // Global pathway.
        std::vector<double> d_agg(static_cast<std::size_t>(steps) * aggregator_.out_features(),
                                  0.0);
        {
            const std::vector<double> d_head = upsample_nearest_backward(d_sig_global, factor, 1);
            const std::vector<double> d_rows = global_head_.backward(d_head);
            for (std::size_t i = 0; i < d_agg.size(); ++i) {
                d_agg[i] += d_rows[i];
            }
        }
        {
            const std::vector<double> d_logits =
                upsample_nearest_backward(d_roi_global, factor, plane);
            const std::vector<double> d_dec = global_dec_.backward(d_logits);
            const Shape3 emb = {steps, emb_shape_.h, emb_shape_.w};
            const std::vector<double> d_seed_rows =
                detail::to_time_major(d_dec, cfg_.encoder_channels, emb);
            const std::vector<double> d_seed = global_seed_.backward(d_seed_rows);
            for (std::size_t i = 0; i < d_agg.size(); ++i) {
                d_agg[i] += d_seed[i];
            }
        }
        {
            const std::vector<double> d_lstm_in = aggregator_.backward(d_agg);
            for (std::size_t i = 0; i < d_emb_time.size(); ++i) {
                d_emb_time[i] += d_lstm_in[i];
            }
        }

        // Merge embedding gradients and run the encoder backward.
        {
            const Shape3 emb = {steps, emb_shape_.h, emb_shape_.w};
            const std::vector<double> from_time =
                detail::to_channel_major(d_emb_time, cfg_.encoder_channels, emb);
            for (std::size_t i = 0; i < d_emb_channel.size(); ++i) {
                d_emb_channel[i] += from_time[i];
            }
        }
        std::vector<double> g = d_emb_channel;
        for (std::size_t b = enc_conv_.size(); b-- > 0;) {
            g = enc_drop_[b].backward(g);
            g = enc_bn_[b].backward(g);
            g = enc_relu_[b].backward(g);
            g = enc_conv_[b].backward(g);
        }
        check_grads_finite();
        return lb;
    }

    // Loss evaluation without gradient bookkeeping (used by gradient checks).
    double loss_value(const std::vector<float>& frames, const VideoSample& gt, bool training,
                      bool update_stats = false) {
        const ModelOutput out = run_forward(frames, gt.num_frames, training, update_stats);
        return loss(out, gt).total;
    }

private:
    std::size_t feature_count() const {
        return static_cast<std::size_t>(cfg_.encoder_channels) * (cfg_.input_h / cfg_.spatial_factor()) *
               (cfg_.input_w / cfg_.spatial_factor());
    }

    std::size_t emb_volume(int steps) const {
        return static_cast<std::size_t>(steps) * emb_shape_.h * emb_shape_.w;
    }

    void init_params() {
        Rng rng(cfg_.seed);
        for (Conv3d& c : enc_conv_) {
            c.init(rng);
        }
        local_head_.init(rng);
        local_dec_.init(rng);
        aggregator_.init(rng);
        global_seed_.init(rng);
        global_head_.init(rng);
        global_dec_.init(rng);
    }

    void check_gt(const VideoSample& gt, int T) const {
        if (gt.num_frames != T || static_cast<int>(gt.gt_signal.values.size()) != T) {
            throw ParamError("ground-truth length does not match prediction length");
        }
        const std::size_t n =
            static_cast<std::size_t>(T) * static_cast<std::size_t>(cfg_.input_h) * cfg_.input_w;
        if (gt.gt_masks.size() != n) {
            throw ParamError("ground-truth mask size does not match model dimensions");
        }
    }

    double mse(const std::vector<double>& pred, const std::vector<double>& gt) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - gt[i];
            acc += d * d;
        }
        return acc / static_cast<double>(pred.size());
    }

    double bce_logits(const std::vector<double>& logits,
                      const std::vector<std::uint8_t>& target) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double z = logits[i];
            const double y = target[i] != 0 ? 1.0 : 0.0;
            acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        }
        return acc / static_cast<double>(logits.size());
    }

    ModelOutput run_forward(const std::vector<float>& frames, int T, bool training,
                            bool update_stats) {
        if (T < 1) {
            throw ParamError("need at least one frame");
        }
        if (T % cfg_.temporal_factor() != 0) {
            throw ParamError("frame count must be divisible by the encoder temporal stride " +
                             std::to_string(cfg_.temporal_factor()));
        }
        const std::size_t plane = static_cast<std::size_t>(cfg_.input_h) * cfg_.input_w;
        if (frames.size() != static_cast<std::size_t>(T) * plane) {
            throw ParamError("frame buffer does not match the configured height and width");
        }

        // Encoder.
        std::vector<double> x(frames.begin(), frames.end());
        Shape3 cur{T, cfg_.input_h, cfg_.input_w};
        for (std::size_t b = 0; b < enc_conv_.size(); ++b) {
            x = enc_conv_[b].forward(x, cur);
            cur = enc_conv_[b].out_shape(cur);
            x = enc_relu_[b].forward(x);
            x = enc_bn_[b].forward(x, cur, training, update_stats);
            x = enc_drop_[b].forward(x, training, dropout_rng_);
        }
        detail::check_finite(x, "encoder embedding");
        const int steps = cur.t;
        const int factor = cfg_.temporal_factor();

        ModelOutput out;

        // Local pathway.
        const std::vector<double> emb_time =
            detail::to_time_major(x, cfg_.encoder_channels, cur);
        out.signal_local =
            upsample_nearest(local_head_.forward(emb_time, steps), factor, 1);
        out.roi_local_logits = upsample_nearest(
            local_dec_.forward(x, cur, training, dropout_rng_, update_stats), factor, plane);

        // Global pathway.
        const std::vector<double> agg = aggregator_.forward(emb_time, steps);
        out.signal_global = upsample_nearest(global_head_.forward(agg, steps), factor, 1);
        const std::vector<double> seed_rows = global_seed_.forward(agg, steps);
        const std::vector<double> seed =
            detail::to_channel_major(seed_rows, cfg_.encoder_channels, cur);
        out.roi_global_logits = upsample_nearest(
            global_dec_.forward(seed, cur, training, dropout_rng_, update_stats), factor, plane);

        out.roi_local.resize(out.roi_local_logits.size());
        for (std::size_t i = 0; i < out.roi_local_logits.size(); ++i) {
            out.roi_local[i] = sigmoid(out.roi_local_logits[i]);
        }
        out.roi_global.resize(out.roi_global_logits.size());
        for (std::size_t i = 0; i < out.roi_global_logits.size(); ++i) {
            out.roi_global[i] = sigmoid(out.roi_global_logits[i]);
        }
        detail::check_finite(out.signal_local, "local signal head");
        detail::check_finite(out.signal_global, "global signal head");
        detail::check_finite(out.roi_local_logits, "local decoder");
        detail::check_finite(out.roi_global_logits, "global decoder");
        return out;
    }

    void check_grads_finite() {
        for (ParamRef& p : params()) {
            for (double g : p.grad->data) {
                if (!std::isfinite(g)) {
                    throw NumericError("non-finite gradient in " + p.name);
                }
            }
        }
    }

    ModelConfig cfg_;
    Shape3 emb_shape_;
    std::vector<Conv3d> enc_conv_;
    std::vector<Relu> enc_relu_;
    std::vector<BatchNorm3d> enc_bn_;
    std::vector<Dropout> enc_drop_;
    SignalHead local_head_;
    SignalHead global_head_;
    RoiDecoder local_dec_;
    RoiDecoder global_dec_;
    Aggregator aggregator_;
    Linear global_seed_;
    Rng dropout_rng_;
};

// ---------------------------------------------------------------------------
// Optimizer: stochastic gradient descent with momentum and global-norm clipping.
// ---------------------------------------------------------------------------
class Sgd {
public:
    Sgd(VSignNet& model, double learning_rate, double momentum, double grad_clip)
        : model_(&model), lr_(learning_rate), momentum_(momentum), clip_(grad_clip) {
        for (ParamRef& p : model.params()) {
            velocity_.emplace_back(p.value->dims);
        }
    }

    void step() {
        std::vector<ParamRef> params = model_->params();
        if (clip_ > 0.0) {
            double norm_sq = 0.0;
            for (ParamRef& p : params) {
                for (double g : p.grad->data) {
                    norm_sq += g * g;
                }
            }
            const double norm = std::sqrt(norm_sq);
            if (norm > clip_) {
                const double scale = clip_ / norm;
                for (ParamRef& p : params) {
                    for (double& g : p.grad->data) {
                        g *= scale;
                    }
                }
            }
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& v = velocity_[i];
            Tensor& w = *params[i].value;
            const Tensor& g = *params[i].grad;
            for (std::size_t j = 0; j < w.data.size(); ++j) {
                v.data[j] = momentum_ * v.data[j] - lr_ * g.data[j];
                w.data[j] += v.data[j];
            }
        }
    }

    std::vector<Tensor>& velocity() { return velocity_; }

private:
    VSignNet* model_;
    double lr_, momentum_, clip_;
    std::vector<Tensor> velocity_;
};

// ---------------------------------------------------------------------------
// Training on streamed synthetic samples.
// ---------------------------------------------------------------------------
struct TrainOptions {
    int steps = 0;
    int start_step = 0;          // resume offset into the data stream
    std::uint64_t data_seed = 0;
    VideoConfig video;           // per-sample seed is overridden by the stream
};

inline LossBreakdown train_step(VSignNet& model, Sgd& optimizer, const TrainOptions& opt,
                                int step) {
    const int batch = model.config().batch_size;
    model.zero_grad();
    LossBreakdown avg;
    for (int b = 0; b < batch; ++b) {
        VideoConfig vc = opt.video;
        vc.seed = opt.data_seed +
                  static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(batch) +
                  static_cast<std::uint64_t>(b);
        const VideoSample sample = generate_video(vc);
        const LossBreakdown lb = model.backward(sample.frames, sample);
        avg.total += lb.total;
        avg.sig_local += lb.sig_local;
        avg.sig_global += lb.sig_global;
        avg.roi_local += lb.roi_local;
        avg.roi_global += lb.roi_global;
    }
    const double inv = 1.0 / static_cast<double>(batch);
    avg.total *= inv;
    avg.sig_local *= inv;
    avg.sig_global *= inv;
    avg.roi_local *= inv;
    avg.roi_global *= inv;
    if (!std::isfinite(avg.total)) {
        throw NumericError("training loss became non-finite at step " + std::to_string(step));
    }
    model.scale_grads(inv);
    optimizer.step();
    return avg;
}

inline std::vector<LossBreakdown> train_model(
    VSignNet& model, Sgd& optimizer, const TrainOptions& opt,
    const std::function<void(int, const LossBreakdown&)>& on_step = nullptr) {
    const ModelConfig& mc = model.config();
    if (opt.video.width != mc.input_w || opt.video.height != mc.input_h) {
        throw ParamError("training video size must match the model input size");
    }
    if (opt.video.num_frames % mc.temporal_factor() != 0) {
        throw ParamError("training clip length must be divisible by the encoder temporal stride");
    }
    std::vector<LossBreakdown> trace;
    trace.reserve(static_cast<std::size_t>(opt.steps));
    for (int s = 0; s < opt.steps; ++s) {
        const LossBreakdown lb = train_step(model, optimizer, opt, opt.start_step + s);
        trace.push_back(lb);
        if (on_step) {
            on_step(opt.start_step + s, lb);
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Inference: global signal, thresholded global ROI, and the peak-counted rate.
// ---------------------------------------------------------------------------
struct InferResult {
    TimeSeries signal;
    std::vector<std::uint8_t> roi;  // T x H x W, probability > 0.5
    std::vector<int> peaks;
    double rate = 0.0;
};

inline InferResult infer_rate(VSignNet& model, const std::vector<float>& frames, int num_frames,
                              double fs, int peak_min_distance = 40) {
    ModelOutput out = model.forward(frames, num_frames, /*training=*/false);
    InferResult result{TimeSeries(std::move(out.signal_global), fs), {}, {}, 0.0};
    result.roi.resize(out.roi_global.size());
    for (std::size_t i = 0; i < out.roi_global.size(); ++i) {
        result.roi[i] = out.roi_global[i] > 0.5 ? 1 : 0;
    }
    result.peaks = dsp::detect_peaks(result.signal, peak_min_distance);
    result.rate = dsp::rate_from_peaks(result.peaks, fs);
    return result;
}

}  // namespace vsynth::nn
