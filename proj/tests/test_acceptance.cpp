// Acceptance suite: nine end-to-end criteria, each printing one summary line
// of the form `[C#] <what>: PASS/FAIL (<measurements>)` before asserting.
// Criteria C6/C7 train the desk-scale model once (shared between the cases)
// on streamed synthetic clips; everything else runs in seconds.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vsynth/dsp.hpp"
#include "vsynth/eval.hpp"
#include "vsynth/io/config.hpp"
#include "vsynth/io/model_io.hpp"
#include "vsynth/io/vsv.hpp"
#include "vsynth/nn/vsignnet.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/scene.hpp"

#ifndef VSYNTH_CLI_PATH
#error "VSYNTH_CLI_PATH must point at the built binary"
#endif

namespace {

using namespace vsynth;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* id, const char* what, bool ok, const std::string& detail) {
    std::printf("[%s] %s: %s (%s)\n", id, what, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

Rect mask_bbox(const std::uint8_t* mask, int width, int height) {
    Rect box{width, height, 0, 0};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (mask[y * width + x]) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x + 1);
                box.y1 = std::max(box.y1, y + 1);
            }
    return box;
}

double mask_iou(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pa = a[i] != 0;
        const bool pb = b[i] != 0;
        inter += static_cast<std::size_t>(pa && pb);
        uni += static_cast<std::size_t>(pa || pb);
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// --- desk-scale closed-loop setup (C6/C7) ---------------------------------

constexpr int kTrainSteps = 20000;
constexpr int kHeldOutCount = 20;
constexpr int kHeldOutFrames = 512;
constexpr std::uint64_t kHeldOutSeedBase = 5000;

// Pinned by calibration: 16 encoder channels and 256-frame clips give the
// fastest distributional learning per wall-clock second; dropout off (the
// model underfits at this scale) and a permissive gradient clip (settled
// gradient norms stay below 1; a tight clip only truncates the early steps).
nn::ModelConfig desk_model_config() {
    nn::ModelConfig mc;
    mc.input_t = 256;
    mc.input_h = 32;
    mc.input_w = 32;
    mc.encoder_blocks = 3;
    mc.encoder_channels = 16;
    mc.temporal_strides = {2, 2, 1};
    mc.spatial_strides = {2, 2, 2};
    mc.lstm_hidden = 32;
    mc.signal_head_widths = {32, 8, 1};
    mc.decoder_blocks = 3;
    mc.decoder_channels = 8;
    mc.dropout = 0.0;
    mc.learning_rate = 0.02;
    mc.momentum = 0.9;
    mc.grad_clip = 50.0;
    mc.seed = 1;
    return mc;
}

VideoConfig desk_video_config(int frames) {
    VideoConfig vc;
    vc.width = 32;
    vc.height = 32;
    vc.num_frames = frames;
    vc.fs = 27.0;
    vc.n_interest = 1;
    vc.n_distractors = 2;
    vc.sp_density = 0.02;
    vc.target_range = FrequencyRange{0.24, 0.54};
    return vc;
}

struct HeldOutResult {
    double rate = std::numeric_limits<double>::quiet_NaN();
    double gt_rate = 0.0;
    bool freq_hit = false;
    double iou = 0.0;
    double control_iou = 0.0;
};

struct ClosedLoop {
    nn::VSignNet model;
    double train_seconds = 0.0;
    std::vector<HeldOutResult> held_out;

    explicit ClosedLoop(const nn::ModelConfig& mc) : model(mc) {}
};

// Dominant frequency (Hz) of the mean-removed series, DC excluded.
double dominant_frequency(const std::vector<double>& values, double fs) {
    std::vector<double> x = values;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) v -= mean;
    const std::vector<std::complex<double>> spec = dsp::dft(x);
    std::size_t best = 1;
    double best_mag = -1.0;
    for (std::size_t k = 1; k <= x.size() / 2; ++k) {
        const double mag = std::abs(spec[k]);
        if (mag > best_mag) {
            best_mag = mag;
            best = k;
        }
    }
    return fs * static_cast<double>(best) / static_cast<double>(x.size());
}

const ClosedLoop& closed_loop() {
    static ClosedLoop* cl = [] {
        auto* out = new ClosedLoop(desk_model_config());
        const nn::ModelConfig& mc = out->model.config();
        nn::Sgd optimizer(out->model, mc.learning_rate, mc.momentum, mc.grad_clip);
        nn::TrainOptions topt;
        topt.steps = kTrainSteps;
        topt.data_seed = 42;
        topt.video = desk_video_config(mc.input_t);

        const auto t0 = Clock::now();
        nn::train_model(out->model, optimizer, topt);
        out->train_seconds = seconds_since(t0);

        // Held-out clips are longer than the training clips and use seeds far
        // outside the training stream.
        for (int i = 0; i < kHeldOutCount; ++i) {
            VideoConfig vc = desk_video_config(kHeldOutFrames);
            vc.seed = kHeldOutSeedBase + static_cast<std::uint64_t>(i);
            const VideoSample sample = generate_video(vc);
            HeldOutResult r;
            r.gt_rate = sample.gt_rate;

            std::vector<double> signal;
            std::vector<std::uint8_t> roi;
            try {
                nn::InferResult inf = nn::infer_rate(out->model, sample.frames,
                                                     sample.num_frames, sample.fs, 40);
                r.rate = inf.rate;
                signal = std::move(inf.signal.values);
                roi = std::move(inf.roi);
            } catch (const InsufficientPeaksError&) {
                nn::ModelOutput fwd =
                    out->model.forward(sample.frames, sample.num_frames, false);
                signal = std::move(fwd.signal_global);
                roi.resize(fwd.roi_global.size());
                for (std::size_t k = 0; k < roi.size(); ++k) {
                    roi[k] = fwd.roi_global[k] > 0.5 ? 1 : 0;
                }
            }

            const double bin = sample.fs / static_cast<double>(sample.num_frames);
            r.freq_hit = std::abs(dominant_frequency(signal, sample.fs) -
                                  sample.gt_rate / 60.0) <= bin + 1e-12;

            // ROI quality vs a control with the same per-frame on-pixel count
            // placed uniformly at random.
            const std::size_t hw =
                static_cast<std::size_t>(sample.width) * sample.height;
            Rng control_rng(7000 + static_cast<std::uint64_t>(i));
            double iou = 0.0;
            double control = 0.0;
            for (int t = 0; t < sample.num_frames; ++t) {
                const std::uint8_t* pm = roi.data() + static_cast<std::size_t>(t) * hw;
                iou += mask_iou(pm, sample.mask(t), hw);
                std::vector<std::uint8_t> shuffled(pm, pm + hw);
                for (std::size_t k = hw - 1; k > 0; --k) {
                    std::swap(shuffled[k], shuffled[control_rng.uniform_int(k + 1)]);
                }
                control += mask_iou(shuffled.data(), sample.mask(t), hw);
            }
            r.iou = iou / sample.num_frames;
            r.control_iou = control / sample.num_frames;
            out->held_out.push_back(r);
        }
        return out;
    }();
    return *cl;
}

// --- CLI plumbing for C9 ---------------------------------------------------

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("vsynth_acc_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const TempDir& dir, const std::string& args) {
    static int log_counter = 0;
    const std::string log = dir.file("log_" + std::to_string(log_counter++) + ".txt");
    const std::string cmd =
        std::string(VSYNTH_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : (WIFEXITED(status) ? WEXITSTATUS(status) : -1);
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

TimeSeries impulse_train(int length, const std::vector<int>& peaks, double fs) {
    std::vector<double> v(static_cast<std::size_t>(length), 0.0);
    for (int p : peaks) v[static_cast<std::size_t>(p)] = 1.0;
    return TimeSeries(std::move(v), fs);
}

VideoSample random_fd_sample(Rng& rng, int T, int H, int W) {
    VideoSample s;
    s.width = W;
    s.height = H;
    s.num_frames = T;
    s.fs = 27.0;
    const std::size_t n = static_cast<std::size_t>(T) * H * W;
    s.frames.resize(n);
    for (float& f : s.frames) f = static_cast<float>(rng.uniform());
    s.gt_signal.fs = s.fs;
    s.gt_signal.values.resize(static_cast<std::size_t>(T));
    for (double& v : s.gt_signal.values) v = rng.uniform();
    s.gt_rate = 60.0;
    s.gt_masks.resize(n);
    for (std::uint8_t& m : s.gt_masks) m = rng.uniform() < 0.2 ? 1 : 0;
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("C1 generator determinism and composition identity") {
    const auto t0 = Clock::now();
    Rng rng(2024);
    bool deterministic = true;
    bool composed = true;
    double worst = 0.0;

    for (int c = 0; c < 20; ++c) {
        VideoConfig vc;
        vc.width = 32 + static_cast<int>(rng.uniform_int(33));   // 32..64
        vc.height = 32 + static_cast<int>(rng.uniform_int(33));
        vc.num_frames = 32 + static_cast<int>(rng.uniform_int(65));  // 32..96
        vc.n_interest = 1 + static_cast<int>(rng.uniform_int(3));
        vc.n_distractors = static_cast<int>(rng.uniform_int(4));
        vc.blur_sigma = 0.0;
        vc.sp_density = 0.0;
        vc.seed = 10000 + static_cast<std::uint64_t>(c);

        const VideoSample a = generate_video(vc);
        const VideoSample b = generate_video(vc);
        deterministic = deterministic && a.frames == b.frames && a.gt_masks == b.gt_masks &&
                        a.gt_signal.values == b.gt_signal.values && a.gt_rate == b.gt_rate;

        const std::size_t hw = static_cast<std::size_t>(vc.width) * vc.height;
        for (int t = 0; t < vc.num_frames; ++t) {
            const std::uint8_t* mask = a.mask(t);
            const float* frame = a.frame(t);
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < hw; ++i) {
                if (mask[i]) {
                    sum += frame[i];
                    ++count;
                }
            }
            if (count == 0) {
                composed = false;
                continue;
            }
            const double mean = sum / static_cast<double>(count);
            const double expect = static_cast<double>(
                static_cast<float>(a.gt_signal.values[static_cast<std::size_t>(t)]));
            worst = std::max(worst, std::abs(mean - expect));
            composed = composed && mean == expect;
        }
    }

    const double elapsed = seconds_since(t0);
    const bool ok = deterministic && composed && elapsed < 60.0;
    std::ostringstream d;
    d << "20 configs, max |mask mean - signal| = " << worst << ", " << std::fixed
      << std::setprecision(1) << elapsed << "s";
    report("C1", "generator determinism and composition identity", ok, d.str());
    REQUIRE(deterministic);
    REQUIRE(composed);
    REQUIRE(elapsed < 60.0);
}

TEST_CASE("C2 classical baseline recovers the planted rate") {
    const auto t0 = Clock::now();
    constexpr int kVideos = 50;
    std::vector<double> errors(kVideos, 0.0);

    const auto score_one = [&](int i) {
        VideoConfig vc;
        vc.width = 64;
        vc.height = 64;
        vc.num_frames = 1000;
        vc.fs = 27.0;
        vc.n_interest = 1;
        vc.n_distractors = 2;
        vc.sp_density = 0.02;
        vc.target_range = FrequencyRange{0.24, 0.54};
        vc.seed = 1000 + static_cast<std::uint64_t>(i);
        const VideoSample sample = generate_video(vc);

        std::vector<Rect> boxes;
        boxes.reserve(static_cast<std::size_t>(sample.num_frames));
        for (int t = 0; t < sample.num_frames; ++t) {
            boxes.push_back(mask_bbox(sample.mask(t), sample.width, sample.height));
        }
        const TimeSeries roi = dsp::mean_roi_signal(sample.frames, sample.num_frames,
                                                    sample.height, sample.width, sample.fs,
                                                    boxes);
        const dsp::BaselineParams params;
        const dsp::BaselineStages stages = dsp::run_baseline_stages(roi, params);
        errors[static_cast<std::size_t>(i)] =
            std::abs(dsp::baseline_dft_rate(stages, params) - sample.gt_rate);
    };

    int workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, kVideos));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < kVideos; i += workers) score_one(i);
        });
    }
    for (std::thread& t : pool) t.join();

    double mae = 0.0;
    for (double e : errors) mae += e;
    mae /= kVideos;
    const double elapsed = seconds_since(t0);
    const bool ok = mae <= 1.7 && elapsed < 300.0;
    std::ostringstream d;
    d << "MAE " << std::fixed << std::setprecision(3) << mae << " BPM over " << kVideos
      << " videos (bound 1.7), " << std::setprecision(1) << elapsed << "s";
    report("C2", "classical baseline frequency recovery", ok, d.str());
    REQUIRE(mae <= 1.7);
    REQUIRE(elapsed < 300.0);
}

TEST_CASE("C3 spectral rate matches a direct DFT oracle") {
    Rng rng(33);
    int agreements = 0;
    constexpr int kSeries = 100;
    const FrequencyRange band{0.1, 10.0};

    for (int i = 0; i < kSeries; ++i) {
        const int n = 64 + static_cast<int>(rng.uniform_int(450));
        TimeSeries series;
        series.fs = 27.0;
        series.values.resize(static_cast<std::size_t>(n));
        for (double& v : series.values) v = rng.uniform(-1.0, 1.0);

        // O(N^2) direct transform, same band and tie rule.
        std::size_t best = 0;
        double best_mag = -1.0;
        bool found = false;
        for (std::size_t k = 0; k <= series.values.size() / 2; ++k) {
            const double f = series.fs * static_cast<double>(k) /
                             static_cast<double>(series.values.size());
            if (!band.contains(f)) continue;
            std::complex<double> acc = 0.0;
            for (std::size_t m = 0; m < series.values.size(); ++m) {
                const double ang = -2.0 * M_PI * static_cast<double>(k * m) /
                                   static_cast<double>(series.values.size());
                acc += series.values[m] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            if (!found || std::abs(acc) > best_mag) {
                found = true;
                best_mag = std::abs(acc);
                best = k;
            }
        }
        const double oracle = 60.0 * series.fs * static_cast<double>(best) /
                              static_cast<double>(series.values.size());
        if (dsp::dft_rate(series, band) == oracle) ++agreements;
    }

    // Band-pass applied twice changes nothing: the kept bins are untouched.
    double worst_idem = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int n = 64 + static_cast<int>(rng.uniform_int(450));
        TimeSeries series;
        series.fs = 27.0;
        series.values.resize(static_cast<std::size_t>(n));
        for (double& v : series.values) v = rng.uniform(-1.0, 1.0);
        const TimeSeries once = dsp::bandpass(series, 0.5, 5.0);
        const TimeSeries twice = dsp::bandpass(once, 0.5, 5.0);
        for (std::size_t k = 0; k < once.values.size(); ++k) {
            worst_idem = std::max(worst_idem, std::abs(once.values[k] - twice.values[k]));
        }
    }

    const bool ok = agreements == kSeries && worst_idem < 1e-9;
    std::ostringstream d;
    d << agreements << "/" << kSeries << " argmax agreements, idempotence residual "
      << worst_idem;
    report("C3", "DFT rate vs direct-transform oracle", ok, d.str());
    REQUIRE(agreements == kSeries);
    REQUIRE(worst_idem < 1e-9);
}

TEST_CASE("C4 peak counting on analytic waveforms") {
    const double fs = 27.0;
    double worst = 0.0;

    for (int period = 50; period <= 120; period += 7) {
        const int length = 20 * period + 1;
        TimeSeries sine, triangle;
        sine.fs = triangle.fs = fs;
        sine.values.resize(static_cast<std::size_t>(length));
        triangle.values.resize(static_cast<std::size_t>(length));
        for (int n = 0; n < length; ++n) {
            const double phase =
                static_cast<double>(n % period) / static_cast<double>(period);
            sine.values[static_cast<std::size_t>(n)] =
                std::sin(2.0 * M_PI * static_cast<double>(n) / period);
            triangle.values[static_cast<std::size_t>(n)] = 1.0 - 2.0 * std::abs(phase - 0.5);
        }
        const double truth = 60.0 * fs / static_cast<double>(period);
        for (const TimeSeries* wave : {&sine, &triangle}) {
            const std::vector<int> peaks = dsp::detect_peaks(*wave, 40);
            const double rate = dsp::rate_from_peaks(peaks, fs);
            worst = std::max(worst, std::abs(rate - truth));
        }
    }

    const bool ok = worst <= 0.5;
    std::ostringstream d;
    d << "periods 50..120, 20 cycles each, max |error| " << std::scientific
      << std::setprecision(2) << worst << " BPM (bound 0.5)";
    report("C4", "peak detection rate accuracy", ok, d.str());
    REQUIRE(worst <= 0.5);
}

TEST_CASE("C5 analytic gradients match finite differences") {
    nn::ModelConfig cfg;
    cfg.input_t = 8;
    cfg.input_h = 8;
    cfg.input_w = 8;
    cfg.encoder_blocks = 2;
    cfg.encoder_channels = 3;
    cfg.temporal_strides = {2, 1};
    cfg.spatial_strides = {2, 2};
    cfg.lstm_hidden = 5;
    cfg.signal_head_widths = {4, 1};
    cfg.decoder_blocks = 2;
    cfg.decoder_channels = 2;
    cfg.dropout = 0.0;
    cfg.seed = 7;

    nn::VSignNet model(cfg);
    Rng rng(81);
    const VideoSample s = random_fd_sample(rng, cfg.input_t, cfg.input_h, cfg.input_w);
    model.zero_grad();
    model.backward(s.frames, s, /*update_stats=*/false);

    const double eps = 1e-4;
    Rng pick(97);
    std::vector<nn::ParamRef> refs = model.params();
    double worst = 0.0;
    int checked = 0;
    for (std::size_t pi = 0; pi < refs.size(); ++pi) {
        const std::size_t count = refs[pi].value->data.size();
        const std::size_t checks = std::min<std::size_t>(count, 20);
        for (std::size_t c = 0; c < checks; ++c) {
            const std::size_t k =
                count <= 20 ? c : static_cast<std::size_t>(pick.uniform_int(count));
            const double analytic = refs[pi].grad->data[k];
            nn::VSignNet plus = model;
            nn::VSignNet minus = model;
            plus.params()[pi].value->data[k] += eps;
            minus.params()[pi].value->data[k] -= eps;
            const double lp = plus.loss_value(s.frames, s, /*training=*/true, false);
            const double lm = minus.loss_value(s.frames, s, /*training=*/true, false);
            const double fd = (lp - lm) / (2 * eps);
            const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-4});
            worst = std::max(worst, std::abs(analytic - fd) / denom);
            ++checked;
        }
    }

    const bool ok = worst < 1e-4;
    std::ostringstream d;
    d << checked << " entries across " << refs.size() << " tensors, max relative error "
      << std::scientific << std::setprecision(2) << worst;
    report("C5", "finite-difference gradient check", ok, d.str());
    REQUIRE(worst < 1e-4);
}

TEST_CASE("C6 closed-loop learning on streamed synthetic data") {
    const ClosedLoop& cl = closed_loop();

    int scored = 0;
    double abs_err = 0.0;
    double mean_iou = 0.0;
    double mean_control = 0.0;
    for (const HeldOutResult& r : cl.held_out) {
        if (std::isfinite(r.rate)) {
            abs_err += std::abs(r.rate - r.gt_rate);
            ++scored;
        }
        mean_iou += r.iou;
        mean_control += r.control_iou;
    }
    const double mae = scored > 0 ? abs_err / scored : std::nan("");
    mean_iou /= static_cast<double>(cl.held_out.size());
    mean_control /= static_cast<double>(cl.held_out.size());
    const bool rate_ok = scored == kHeldOutCount && mae <= 3.0;
    const bool iou_ok = mean_iou > mean_control;

    // Single-video overfit: loss under 10% of its initial value within 500
    // steps of repeating one clip.
    nn::ModelConfig omc = desk_model_config();
    omc.dropout = 0.0;
    nn::VSignNet overfit_model(omc);
    nn::Sgd overfit_opt(overfit_model, omc.learning_rate, omc.momentum, omc.grad_clip);
    VideoConfig ovc = desk_video_config(omc.input_t);
    ovc.seed = 7;
    const VideoSample clip = generate_video(ovc);
    double initial = 0.0;
    double final_ratio = 1.0;
    int overfit_steps = 0;
    for (int step = 0; step < 500; ++step) {
        overfit_model.zero_grad();
        const nn::LossBreakdown lb = overfit_model.backward(clip.frames, clip);
        overfit_opt.step();
        if (step == 0) initial = lb.total;
        final_ratio = lb.total / initial;
        overfit_steps = step + 1;
        if (final_ratio < 0.1) break;
    }
    const bool overfit_ok = final_ratio < 0.1;

    const bool ok = rate_ok && iou_ok && overfit_ok;
    std::ostringstream d;
    d << std::fixed << std::setprecision(3) << "rate MAE " << mae << " BPM over " << scored
      << "/" << kHeldOutCount << " held-out (bound 3.0); ROI IOU " << mean_iou
      << " vs control " << mean_control << "; overfit to " << std::setprecision(1)
      << 100.0 * final_ratio << "% of initial loss in " << overfit_steps
      << " steps; train " << cl.train_seconds << "s for " << kTrainSteps << " steps";
    report("C6", "closed-loop learning", ok, d.str());
    REQUIRE(rate_ok);
    REQUIRE(iou_ok);
    REQUIRE(overfit_ok);
}

TEST_CASE("C7 trained model rejects distractor frequencies") {
    const ClosedLoop& cl = closed_loop();
    int hits = 0;
    for (const HeldOutResult& r : cl.held_out) hits += r.freq_hit ? 1 : 0;
    const double fraction =
        static_cast<double>(hits) / static_cast<double>(cl.held_out.size());
    const bool ok = fraction >= 0.9;
    std::ostringstream d;
    d << hits << "/" << cl.held_out.size()
      << " held-out clips with the dominant frequency within one bin of the target";
    report("C7", "distractor rejection", ok, d.str());
    REQUIRE(ok);
}

TEST_CASE("C8 evaluation harness unit identities") {
    // Windowed MAE/STD: predicted {18, 20} BPM vs reference {18, 18}.
    const double fs = 1.0;
    const TimeSeries pred = impulse_train(240, {10, 13, 16, 20, 130, 133, 136, 139}, fs);
    eval::RateAnnotation ann;
    ann.fs = fs;
    ann.event_times = {10, 13, 16, 20, 130, 133, 136, 140};
    const eval::MetricsReport windowed = eval::windowed_rate_eval(pred, ann, 120, 60, 2);
    const bool windowed_ok = std::abs(windowed.mae - 1.0) < 1e-12 &&
                             std::abs(windowed.std - 1.0) < 1e-12;

    // Temporal localization: one peak at 125 inside [100, 200).
    const eval::LocalizationReport loc = eval::temporal_localization({125}, {100, 200}, fs);
    const bool loc_ok = std::abs(loc.mean - 0.25) < 1e-12 && loc.periods == 1;

    // ROI identities: identical shapes and disjoint shapes.
    std::vector<std::uint8_t> mask(64, 0);
    for (int y = 2; y < 5; ++y)
        for (int x = 2; x < 5; ++x) mask[static_cast<std::size_t>(y) * 8 + x] = 1;
    const eval::RoiResult same = eval::roi_metrics(mask.data(), 8, 8, Rect{2, 2, 5, 5});
    const eval::RoiResult disjoint = eval::roi_metrics(mask.data(), 8, 8, Rect{5, 5, 8, 8});
    const bool roi_ok = same.iou == 1.0 && same.center_hit && same.dc == 0.0 &&
                        disjoint.iou == 0.0 && !disjoint.center_hit;

    const bool ok = windowed_ok && loc_ok && roi_ok;
    std::ostringstream d;
    d << "windowed (MAE " << windowed.mae << ", STD " << windowed.std << "), localization "
      << loc.mean << ", ROI identical/disjoint (" << same.iou << "," << disjoint.iou << ")";
    report("C8", "evaluation harness identities", ok, d.str());
    REQUIRE(windowed_ok);
    REQUIRE(loc_ok);
    REQUIRE(roi_ok);
}

TEST_CASE("C9 format round-trips and command reproducibility") {
    TempDir dir;

    // Video container: write-read-write is byte-exact.
    Rng rng(91);
    io::VsvVideo video;
    video.width = 20;
    video.height = 12;
    video.num_frames = 9;
    video.fs = 27.0;
    video.frames.resize(20 * 12 * 9);
    for (float& f : video.frames) f = static_cast<float>(rng.uniform());
    const std::string v1 = dir.file("a.vsv");
    const std::string v2 = dir.file("b.vsv");
    io::write_vsv(v1, video);
    const io::VsvVideo back = io::read_vsv(v1);
    io::write_vsv(v2, back);
    const bool vsv_ok = back.frames == video.frames &&
                        read_file_bytes(v1) == read_file_bytes(v2);

    // Checkpoint: save-load-save is byte-exact.
    nn::ModelConfig mc;
    mc.input_t = 8;
    mc.input_h = 16;
    mc.input_w = 16;
    mc.encoder_blocks = 2;
    mc.encoder_channels = 3;
    mc.temporal_strides = {2, 1};
    mc.spatial_strides = {2, 2};
    mc.lstm_hidden = 5;
    mc.signal_head_widths = {4, 1};
    mc.decoder_blocks = 2;
    mc.decoder_channels = 2;
    mc.dropout = 0.0;
    mc.seed = 3;
    nn::VSignNet model(mc);
    const std::string c1 = dir.file("a.vsnp");
    const std::string c2 = dir.file("b.vsnp");
    io::save_model(c1, model, 0);
    io::LoadedModel loaded = io::load_model(c1);
    io::save_model(c2, loaded.model, loaded.trained_steps);
    const bool ckpt_ok = read_file_bytes(c1) == read_file_bytes(c2);

    // CLI reruns with identical configs reproduce identical artifacts.
    nlohmann::json j;
    j["video"] = {{"width", 16},      {"height", 16},      {"num_frames", 32},
                  {"fs", 27.0},       {"n_interest", 1},   {"n_distractors", 0},
                  {"sp_density", 0.0}, {"blur_sigma", 0.5}, {"seed", 11}};
    j["model"] = {{"input_t", 32},          {"input_h", 16},
                  {"input_w", 16},          {"encoder_blocks", 2},
                  {"encoder_channels", 3},  {"temporal_strides", {2, 1}},
                  {"spatial_strides", {2, 2}}, {"lstm_hidden", 5},
                  {"signal_head_widths", {4, 1}}, {"decoder_blocks", 2},
                  {"decoder_channels", 2},  {"dropout", 0.0},
                  {"seed", 13}};
    j["train"] = {{"steps", 2}, {"data_seed", 19}};
    const std::string config = dir.file("run.json");
    std::ofstream(config) << j.dump(2);

    bool cli_ok = true;
    cli_ok = cli_ok && run_cli(dir, "generate --config " + config + " --count 2 --out " +
                                        dir.file("g1")) == 0;
    cli_ok = cli_ok && run_cli(dir, "generate --config " + config + " --count 2 --out " +
                                        dir.file("g2")) == 0;
    cli_ok = cli_ok &&
             read_file_bytes(dir.file("g1/manifest.txt")) ==
                 read_file_bytes(dir.file("g2/manifest.txt")) &&
             read_file_bytes(dir.file("g1/sample_00001.vsv")) ==
                 read_file_bytes(dir.file("g2/sample_00001.vsv")) &&
             read_file_bytes(dir.file("g1/sample_00001.json")) ==
                 read_file_bytes(dir.file("g2/sample_00001.json"));
    cli_ok = cli_ok && run_cli(dir, "train --config " + config + " --out " +
                                        dir.file("m1.vsnp")) == 0;
    cli_ok = cli_ok && run_cli(dir, "train --config " + config + " --out " +
                                        dir.file("m2.vsnp")) == 0;
    cli_ok = cli_ok && read_file_bytes(dir.file("m1.vsnp")) ==
                           read_file_bytes(dir.file("m2.vsnp"));

    const bool ok = vsv_ok && ckpt_ok && cli_ok;
    std::ostringstream d;
    d << "video container " << (vsv_ok ? "exact" : "MISMATCH") << ", checkpoint "
      << (ckpt_ok ? "exact" : "MISMATCH") << ", command reruns "
      << (cli_ok ? "identical" : "MISMATCH");
    report("C9", "format round-trips and reproducibility", ok, d.str());
    REQUIRE(vsv_ok);
    REQUIRE(ckpt_ok);
    REQUIRE(cli_ok);
}
