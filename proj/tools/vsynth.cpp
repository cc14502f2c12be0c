// vsynth: synthetic vital-sign videos end to end — generate corpora, run the
// classical rate pipeline, train the sequence model, infer and evaluate.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
// Every successful command prints a final `outputs:` line naming every file
// it wrote, so scripts can collect artifacts without guessing paths.

#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vsynth/core.hpp"
#include "vsynth/dsp.hpp"
#include "vsynth/eval.hpp"
#include "vsynth/io/config.hpp"
#include "vsynth/io/csv.hpp"
#include "vsynth/io/metrics_io.hpp"
#include "vsynth/io/model_io.hpp"
#include "vsynth/io/pgm.hpp"
#include "vsynth/io/sidecar.hpp"
#include "vsynth/io/vsv.hpp"
#include "vsynth/nn/vsignnet.hpp"
#include "vsynth/scene.hpp"

namespace fs = std::filesystem;
using namespace vsynth;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

void print_outputs(const std::vector<std::string>& outputs) {
    std::cout << "outputs:";
    for (const std::string& p : outputs) std::cout << ' ' << p;
    std::cout << "\n";
}

std::string fixed2(double v) { return io::detail::fixed2(v); }

// Inputs are checked for existence before any output file is opened, so a
// bad invocation cannot leave partial artifacts behind.
void require_input(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw ConfigError(std::string(what) + " not found: " + path);
    }
}

// The VSYNTH_SEED environment variable overrides the configured video seed
// (both the generation seed and the training-stream template) so sweep
// scripts can vary seeds without editing config files.
void apply_env_seed(io::RunConfig& run) {
    const char* env = std::getenv("VSYNTH_SEED");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw ConfigError(std::string("VSYNTH_SEED is not an unsigned integer: ") + env);
    }
    run.video.seed = static_cast<std::uint64_t>(v);
    run.train.video.seed = static_cast<std::uint64_t>(v);
}

io::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return io::RunConfig{};
    require_input(path, "config file");
    io::RunConfig run = io::load_run_config(path);
    apply_env_seed(run);
    return run;
}

// Reads either a VSV container or a directory of 16-bit grayscale frames
// (frame index in the file name); `dir_fs` supplies the sampling rate that a
// bare frame directory cannot carry.
io::VsvVideo load_input_video(const std::string& path, double dir_fs) {
    require_input(path, "input");
    if (fs::is_directory(path)) {
        return io::load_frame_dir(path, dir_fs);
    }
    return io::read_vsv(path);
}

// One rectangle per frame; a single-row file is broadcast to every frame.
std::vector<Rect> load_boxes(const std::string& path, int num_frames) {
    require_input(path, "boxes file");
    std::vector<Rect> boxes = io::read_boxes_file(path);
    if (boxes.size() == 1) {
        boxes.assign(static_cast<std::size_t>(num_frames), boxes.front());
    }
    if (boxes.size() != static_cast<std::size_t>(num_frames)) {
        throw ParamError("boxes file has " + std::to_string(boxes.size()) +
                         " rows; need 1 or " + std::to_string(num_frames));
    }
    return boxes;
}

void parse_band(const std::string& text, dsp::BaselineParams& params) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("--band expects lo:hi in Hz, got: " + text);
    }
    params.band_lo_hz = io::detail::parse_double(text.substr(0, colon), "--band low edge");
    params.band_hi_hz = io::detail::parse_double(text.substr(colon + 1), "--band high edge");
    if (!(params.band_lo_hz > 0.0) || !(params.band_lo_hz < params.band_hi_hz)) {
        throw ConfigError("--band needs 0 < lo < hi");
    }
}

void check_model_input(const nn::ModelConfig& mc, const io::VsvVideo& video) {
    if (video.width != mc.input_w || video.height != mc.input_h) {
        throw ConfigError("input is " + std::to_string(video.width) + "x" +
                          std::to_string(video.height) + " but the checkpoint expects " +
                          std::to_string(mc.input_w) + "x" + std::to_string(mc.input_h));
    }
    if (video.num_frames < mc.temporal_factor() ||
        video.num_frames % mc.temporal_factor() != 0) {
        throw ConfigError("input length " + std::to_string(video.num_frames) +
                          " is not a positive multiple of the encoder temporal stride " +
                          std::to_string(mc.temporal_factor()));
    }
}

// Write-to-temp-then-rename keeps the previous checkpoint intact if the
// process dies mid-write.
void save_checkpoint_atomic(const std::string& path, nn::VSignNet& model, int trained_steps,
                            nn::Sgd* optimizer) {
    const std::string tmp = path + ".tmp";
    io::save_model(tmp, model, trained_steps, optimizer);
    fs::rename(tmp, path);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream os = io::detail::open_for_write(path);
    os << j.dump(2) << "\n";
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

void write_plot_csv(const std::string& path, const TimeSeries& signal,
                    const std::vector<int>& peaks) {
    std::vector<std::uint8_t> flag(signal.values.size(), 0);
    for (int p : peaks) {
        if (p >= 0 && static_cast<std::size_t>(p) < flag.size()) flag[static_cast<std::size_t>(p)] = 1;
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(signal.values.size());
    for (std::size_t i = 0; i < signal.values.size(); ++i) {
        rows.push_back({static_cast<double>(i), signal.values[i], static_cast<double>(flag[i])});
    }
    io::write_csv(path, {"frame", "signal", "peak"}, rows);
}

std::vector<std::string> read_label_file(const std::string& path) {
    require_input(path, "labels file");
    std::ifstream is = io::detail::open_for_read(path);
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(is, line)) {
        const std::string label = io::detail::strip(line);
        if (!label.empty()) labels.push_back(label);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// generate: sample videos + sidecars + checksum manifest
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string config_path;
    std::string out_dir;
    int count = 1;
    int threads = 0;  // 0 = one per hardware thread, capped at count
};

std::string sample_stem(int index) {
    std::ostringstream os;
    os << "sample_" << std::setw(5) << std::setfill('0') << index;
    return os.str();
}

int cmd_generate(const GenerateArgs& args) {
    const io::RunConfig run = load_config_or_default(args.config_path);
    if (args.count < 0) throw ConfigError("--count must be non-negative");
    fs::create_directories(args.out_dir);

    struct Entry {
        std::string vsv_name, sidecar_name;
        std::uint64_t vsv_sum = 0, sidecar_sum = 0;
        double gt_rate = 0.0;
    };
    std::vector<Entry> entries(static_cast<std::size_t>(args.count));

    const auto make_one = [&](int i) {
        VideoConfig vc = run.video;
        vc.seed = run.video.seed + static_cast<std::uint64_t>(i);
        const VideoSample sample = generate_video(vc);
        Entry& e = entries[static_cast<std::size_t>(i)];
        e.vsv_name = sample_stem(i) + ".vsv";
        e.sidecar_name = sample_stem(i) + ".json";
        const std::string vsv_path = (fs::path(args.out_dir) / e.vsv_name).string();
        const std::string sidecar_path = (fs::path(args.out_dir) / e.sidecar_name).string();
        io::write_vsv(vsv_path, sample.width, sample.height, sample.num_frames, sample.fs,
                      sample.frames);
        io::write_sidecar(sidecar_path, sample, vc);
        e.vsv_sum = io::fnv1a64_file(vsv_path);
        e.sidecar_sum = io::fnv1a64_file(sidecar_path);
        e.gt_rate = sample.gt_rate;
    };

    // Samples are independent (each derives everything from its own seed), so
    // they are rendered on a small thread pool; the manifest is assembled in
    // index order afterwards, keeping the output byte-stable regardless of
    // thread count.
    int workers = args.threads > 0 ? args.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, args.count));
    if (workers <= 1 || args.count <= 1) {
        for (int i = 0; i < args.count; ++i) make_one(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (int i = w; i < args.count; i += workers) make_one(i);
                } catch (...) {
                    failures[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& ep : failures) {
            if (ep) std::rethrow_exception(ep);
        }
    }

    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.txt").string();
    {
        std::ofstream os = io::detail::open_for_write(manifest_path);
        for (const Entry& e : entries) {
            os << e.vsv_name << ' ' << io::hex64(e.vsv_sum) << ' '
               << io::format_double(e.gt_rate) << "\n";
            os << e.sidecar_name << ' ' << io::hex64(e.sidecar_sum) << ' '
               << io::format_double(e.gt_rate) << "\n";
        }
        os.flush();
        if (!os) throw IoError("write failed: " + manifest_path);
    }

    std::cout << "generated " << args.count << " sample(s) in " << args.out_dir << "\n";
    std::vector<std::string> outputs{manifest_path};
    for (const Entry& e : entries) {
        outputs.push_back((fs::path(args.out_dir) / e.vsv_name).string());
        outputs.push_back((fs::path(args.out_dir) / e.sidecar_name).string());
    }
    print_outputs(outputs);
    return 0;
}

// ---------------------------------------------------------------------------
// analyze: classical pipeline on a video + ROI boxes
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string input;
    std::string boxes_path;
    std::string config_path;
    std::string band;
    std::string method = "dft";
    std::string out_csv = "signal.csv";
    std::string dump_prefix;
    double dir_fs = 27.0;
};

int cmd_analyze(const AnalyzeArgs& args) {
    const io::RunConfig run = load_config_or_default(args.config_path);
    dsp::BaselineParams params = run.dsp_params;
    if (!args.band.empty()) parse_band(args.band, params);

    const io::VsvVideo video = load_input_video(args.input, args.dir_fs);
    const std::vector<Rect> boxes = load_boxes(args.boxes_path, video.num_frames);

    const TimeSeries roi_mean = dsp::mean_roi_signal(video.frames, video.num_frames,
                                                     video.height, video.width, video.fs, boxes);
    const dsp::BaselineStages stages = dsp::run_baseline_stages(roi_mean, params);
    const double rate = args.method == "peaks" ? dsp::baseline_peak_rate(stages, params)
                                               : dsp::baseline_dft_rate(stages, params);

    std::vector<std::string> outputs;
    io::write_series_csv(args.out_csv, stages.bandpassed);
    outputs.push_back(args.out_csv);
    if (!args.dump_prefix.empty()) {
        const std::vector<std::pair<std::string, const TimeSeries*>> dumps{
            {args.dump_prefix + "_roi_mean.csv", &stages.roi_mean},
            {args.dump_prefix + "_detrended.csv", &stages.detrended},
            {args.dump_prefix + "_normalized.csv", &stages.normalized},
            {args.dump_prefix + "_bandpassed.csv", &stages.bandpassed},
        };
        for (const auto& [path, series] : dumps) {
            io::write_series_csv(path, *series);
            outputs.push_back(path);
        }
    }

    std::cout << "rate: " << fixed2(rate) << " BPM (" << args.method << ", band "
              << io::format_double(params.band_lo_hz) << "-"
              << io::format_double(params.band_hi_hz) << " Hz)\n";
    print_outputs(outputs);
    return 0;
}

// ---------------------------------------------------------------------------
// train: stream generated clips into the model, checkpoint + loss curve
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string out_path;
    std::string loss_csv;
    int steps_override = -1;
    int checkpoint_every = 50;
    bool resume = false;
};

int cmd_train(const TrainArgs& args) {
    require_input(args.config_path, "config file");
    io::RunConfig run = io::load_run_config(args.config_path);
    apply_env_seed(run);
    nn::TrainOptions topt = run.train;
    if (args.steps_override >= 0) topt.steps = args.steps_override;
    const nn::ModelConfig mc = run.model;

    nn::VSignNet model(mc);
    int start_step = 0;
    std::vector<nn::Tensor> resumed_velocity;
    bool have_velocity = false;
    if (args.resume) {
        require_input(args.out_path, "checkpoint to resume");
        io::LoadedModel loaded = io::load_model(args.out_path);
        if (io::model_config_to_json(loaded.config) != io::model_config_to_json(mc)) {
            throw ConfigError("checkpoint " + args.out_path +
                              " was trained with a different model configuration");
        }
        model = std::move(loaded.model);
        start_step = loaded.trained_steps;
        have_velocity = loaded.has_velocity;
        resumed_velocity = std::move(loaded.velocity);
    }
    topt.start_step = start_step;

    nn::Sgd optimizer(model, mc.learning_rate, mc.momentum, mc.grad_clip);
    if (have_velocity) optimizer.velocity() = std::move(resumed_velocity);

    const std::string loss_path =
        !args.loss_csv.empty()
            ? args.loss_csv
            : fs::path(args.out_path).replace_extension().string() + "_loss.csv";
    std::ofstream loss_os = io::detail::open_for_write(loss_path);
    loss_os << "step,total,sig_local,sig_global,roi_local,roi_global\n";
    loss_os.flush();

    // A checkpoint is written before the first step (fresh runs) and then
    // every --checkpoint-every steps; if training diverges, the last of these
    // survives and the command fails without touching it again.
    if (!args.resume) save_checkpoint_atomic(args.out_path, model, start_step, &optimizer);

    const int total_steps = topt.steps;
    try {
        nn::train_model(model, optimizer, topt, [&](int step, const nn::LossBreakdown& lb) {
            loss_os << step << ',' << io::format_double(lb.total) << ','
                    << io::format_double(lb.sig_local) << ',' << io::format_double(lb.sig_global)
                    << ',' << io::format_double(lb.roi_local) << ','
                    << io::format_double(lb.roi_global) << "\n";
            loss_os.flush();
            const int done = step + 1 - start_step;
            if (args.checkpoint_every > 0 && done % args.checkpoint_every == 0 &&
                done < total_steps) {
                save_checkpoint_atomic(args.out_path, model, step + 1, &optimizer);
            }
            if (done == 1 || done % 10 == 0 || done == total_steps) {
                std::cerr << "step " << done << "/" << total_steps << " loss "
                          << fixed2(lb.total) << "\n";
            }
        });
    } catch (const NumericError& e) {
        std::cerr << "training diverged: " << e.what() << "\n"
                  << "last good checkpoint kept at " << args.out_path << "\n";
        return 1;
    }

    save_checkpoint_atomic(args.out_path, model, start_step + topt.steps, &optimizer);
    std::cout << "trained " << topt.steps << " step(s), checkpoint at step "
              << start_step + topt.steps << "\n";
    print_outputs({args.out_path, loss_path});
    return 0;
}

// ---------------------------------------------------------------------------
// infer: model forward + peak-counted rate on one video
// ---------------------------------------------------------------------------

struct InferArgs {
    std::string checkpoint;
    std::string input;
    std::string config_path;
    std::string plot_csv;
    std::string report_json;
    int min_distance = 0;  // 0 = take from config/default
    double dir_fs = 27.0;
};

// When --config is given its model section must agree with the checkpoint.
io::LoadedModel load_checkpoint_checked(const std::string& checkpoint_path,
                                        const io::RunConfig& run, bool have_config) {
    require_input(checkpoint_path, "checkpoint");
    io::LoadedModel loaded = io::load_model(checkpoint_path);
    if (have_config &&
        io::model_config_to_json(loaded.config) != io::model_config_to_json(run.model)) {
        throw ConfigError("checkpoint " + checkpoint_path +
                          " does not match the model section of the config");
    }
    return loaded;
}

int cmd_infer(const InferArgs& args) {
    const io::RunConfig run = load_config_or_default(args.config_path);
    io::LoadedModel loaded =
        load_checkpoint_checked(args.checkpoint, run, !args.config_path.empty());
    const io::VsvVideo video = load_input_video(args.input, args.dir_fs);
    check_model_input(loaded.config, video);
    const int min_distance =
        args.min_distance > 0 ? args.min_distance : run.eval_params.peak_min_distance;

    const nn::InferResult result =
        nn::infer_rate(loaded.model, video.frames, video.num_frames, video.fs, min_distance);

    std::vector<std::string> outputs;
    if (!args.plot_csv.empty()) {
        write_plot_csv(args.plot_csv, result.signal, result.peaks);
        outputs.push_back(args.plot_csv);
    }
    if (!args.report_json.empty()) {
        nlohmann::json j;
        j["rate_bpm"] = result.rate;
        j["fs"] = video.fs;
        j["num_frames"] = video.num_frames;
        j["peaks"] = result.peaks;
        std::size_t on = 0;
        for (std::uint8_t m : result.roi) on += m;
        j["roi_on_fraction"] =
            result.roi.empty() ? 0.0 : static_cast<double>(on) / static_cast<double>(result.roi.size());
        write_json_file(args.report_json, j);
        outputs.push_back(args.report_json);
    }

    std::cout << "rate: " << fixed2(result.rate) << " BPM (" << result.peaks.size()
              << " peaks over " << video.num_frames << " frames)\n";
    print_outputs(outputs);
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate: windowed rate metrics (+ ROI metrics) against an annotation
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string checkpoint;
    std::string input;
    std::string config_path;
    std::string annotation;
    std::string boxes_path;
    std::string labels_path;
    std::string preset;
    std::string report_json = "metrics.json";
    std::string report_csv = "metrics.csv";
    std::string plot_csv;
    int window = 0;
    int report_window = 0;
    int min_distance = 0;
    double dir_fs = 27.0;
};

int cmd_evaluate(const EvaluateArgs& args) {
    const io::RunConfig run = load_config_or_default(args.config_path);
    io::LoadedModel loaded =
        load_checkpoint_checked(args.checkpoint, run, !args.config_path.empty());
    const io::VsvVideo video = load_input_video(args.input, args.dir_fs);
    check_model_input(loaded.config, video);

    eval::EvalParams ep = run.eval_params;
    if (args.preset == "heart") {
        ep.window = 250;
    } else if (args.preset == "breath") {
        ep.window = 1000;
    } else if (!args.preset.empty()) {
        throw ConfigError("--preset must be breath or heart, got: " + args.preset);
    }
    if (args.window > 0) ep.window = args.window;
    if (args.report_window > 0) ep.report_window = args.report_window;
    if (args.min_distance > 0) ep.peak_min_distance = args.min_distance;
    ep.validate();

    // Same steps as `infer`, but a sequence with fewer than two overall peaks
    // degrades to a null rate instead of failing: the windowed metrics can
    // still score windows on their own.
    nn::ModelOutput out = loaded.model.forward(video.frames, video.num_frames, false);
    const TimeSeries signal(std::move(out.signal_global), video.fs);
    const std::vector<int> peaks = dsp::detect_peaks(signal, ep.peak_min_distance);
    double overall_rate = std::numeric_limits<double>::quiet_NaN();
    if (peaks.size() >= 2) {
        overall_rate = dsp::rate_from_peaks(peaks, video.fs);
    }
    std::vector<std::uint8_t> roi(out.roi_global.size());
    for (std::size_t i = 0; i < roi.size(); ++i) roi[i] = out.roi_global[i] > 0.5 ? 1 : 0;

    nlohmann::json report;
    report["rate_bpm"] = io::json_number_or_null(overall_rate);
    report["fs"] = video.fs;
    report["num_frames"] = video.num_frames;

    std::vector<std::string> outputs;
    bool wrote_csv = false;
    if (!args.annotation.empty()) {
        require_input(args.annotation, "annotation");
        const io::Sidecar side = io::read_sidecar(args.annotation);
        eval::RateAnnotation annotation;
        annotation.fs = video.fs;
        annotation.rate_series.assign(static_cast<std::size_t>(video.num_frames), side.gt_rate);
        std::vector<std::string> labels;
        if (!args.labels_path.empty()) labels = read_label_file(args.labels_path);

        const eval::MetricsReport metrics = eval::windowed_rate_eval(
            signal, annotation, ep.window, ep.report_window, ep.peak_min_distance, labels);
        report["windowed"] = io::metrics_report_to_json(metrics);
        io::write_metrics_csv(args.report_csv, metrics);
        wrote_csv = true;

        std::cout << "windowed rate metrics (window " << ep.window << ", reported per "
                  << ep.report_window << " frames):\n"
                  << io::format_metrics_table(metrics);
    }

    if (!args.boxes_path.empty()) {
        const std::vector<Rect> boxes = load_boxes(args.boxes_path, video.num_frames);
        const eval::RoiSequenceReport roi_report = eval::roi_sequence_metrics(
            roi.data(), video.num_frames, video.width, video.height, boxes);
        report["roi"] = io::roi_report_to_json(roi_report);
        std::cout << "roi: mean IOU " << fixed2(roi_report.mean_iou) << ", center hit rate "
                  << fixed2(roi_report.chr) << ", mean center distance "
                  << fixed2(roi_report.mean_dc) << " px\n";
    }

    if (!args.plot_csv.empty()) {
        write_plot_csv(args.plot_csv, signal, peaks);
        outputs.push_back(args.plot_csv);
    }
    write_json_file(args.report_json, report);
    outputs.push_back(args.report_json);
    if (wrote_csv) outputs.push_back(args.report_csv);

    if (std::isfinite(overall_rate)) {
        std::cout << "rate: " << fixed2(overall_rate) << " BPM (" << peaks.size()
                  << " peaks over " << video.num_frames << " frames)\n";
    } else {
        std::cout << "rate: n/a (fewer than 2 peaks over the full sequence)\n";
    }
    print_outputs(outputs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic vital-sign videos: generate, analyze, train, infer, evaluate"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* c_gen = app.add_subcommand("generate", "render videos + sidecars + manifest");
    c_gen->add_option("--config", gen.config_path, "run config (JSON); defaults when omitted");
    c_gen->add_option("--out", gen.out_dir, "output directory")->required();
    c_gen->add_option("--count", gen.count, "number of samples (seeds seed..seed+count-1)");
    c_gen->add_option("--threads", gen.threads, "worker threads (0 = auto)");

    AnalyzeArgs ana;
    CLI::App* c_ana = app.add_subcommand("analyze", "classical rate pipeline on one video");
    c_ana->add_option("--input", ana.input, "VSV file or frame directory")->required();
    c_ana->add_option("--boxes", ana.boxes_path, "ROI boxes file (x0 y0 x1 y1 per line)")
        ->required();
    c_ana->add_option("--config", ana.config_path, "run config (JSON)");
    c_ana->add_option("--band", ana.band, "pass band lo:hi in Hz (default 0.1:0.8)");
    c_ana->add_option("--method", ana.method, "rate estimator")
        ->check(CLI::IsMember({"dft", "peaks"}));
    c_ana->add_option("--out", ana.out_csv, "filtered signal CSV path");
    c_ana->add_option("--dump-stages", ana.dump_prefix, "write every pipeline stage CSV");
    c_ana->add_option("--fs", ana.dir_fs, "sampling rate for frame directories");

    TrainArgs tr;
    CLI::App* c_tr = app.add_subcommand("train", "train the model on streamed synthetic clips");
    c_tr->add_option("--config", tr.config_path, "run config (JSON)")->required();
    c_tr->add_option("--out", tr.out_path, "checkpoint path")->required();
    c_tr->add_option("--loss-csv", tr.loss_csv, "loss curve CSV (default <out>_loss.csv)");
    c_tr->add_option("--steps", tr.steps_override, "override train.steps from the config");
    c_tr->add_option("--checkpoint-every", tr.checkpoint_every,
                     "steps between periodic checkpoints (0 = final only)");
    c_tr->add_flag("--resume", tr.resume, "continue from the existing checkpoint");

    InferArgs inf;
    CLI::App* c_inf = app.add_subcommand("infer", "predict the rate for one video");
    c_inf->add_option("--checkpoint", inf.checkpoint, "model checkpoint")->required();
    c_inf->add_option("--input", inf.input, "VSV file or frame directory")->required();
    c_inf->add_option("--config", inf.config_path, "run config (JSON); must match checkpoint");
    c_inf->add_option("--plot", inf.plot_csv, "write frame,signal,peak CSV");
    c_inf->add_option("--report", inf.report_json, "write rate report JSON");
    c_inf->add_option("--min-distance", inf.min_distance, "peak spacing in frames");
    c_inf->add_option("--fs", inf.dir_fs, "sampling rate for frame directories");

    EvaluateArgs ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "windowed metrics against an annotation");
    c_ev->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
    c_ev->add_option("--input", ev.input, "VSV file or frame directory")->required();
    c_ev->add_option("--config", ev.config_path, "run config (JSON); must match checkpoint");
    c_ev->add_option("--annotation", ev.annotation, "ground-truth sidecar JSON");
    c_ev->add_option("--boxes", ev.boxes_path, "reference ROI boxes file");
    c_ev->add_option("--labels", ev.labels_path, "per-window label file (one per line)");
    c_ev->add_option("--preset", ev.preset, "window preset: breath (1000) or heart (250)");
    c_ev->add_option("--window", ev.window, "scoring window in frames");
    c_ev->add_option("--report-window", ev.report_window, "reporting window in frames");
    c_ev->add_option("--min-distance", ev.min_distance, "peak spacing in frames");
    c_ev->add_option("--report-json", ev.report_json, "metrics JSON path");
    c_ev->add_option("--report-csv", ev.report_csv, "per-window metrics CSV path");
    c_ev->add_option("--plot", ev.plot_csv, "write frame,signal,peak CSV");
    c_ev->add_option("--fs", ev.dir_fs, "sampling rate for frame directories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help stays success; bad usage is 2
    }

    try {
        if (c_gen->parsed()) return cmd_generate(gen);
        if (c_ana->parsed()) return cmd_analyze(ana);
        if (c_tr->parsed()) return cmd_train(tr);
        if (c_inf->parsed()) return cmd_infer(inf);
        if (c_ev->parsed()) return cmd_evaluate(ev);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParamError& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
