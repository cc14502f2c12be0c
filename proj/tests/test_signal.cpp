#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "vsynth/signal.hpp"

using namespace vsynth;
using Catch::Approx;

TEST_CASE("rng: identical seeds give identical streams") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.raw() == b.raw());
        REQUIRE(a.uniform() == b.uniform());
        REQUIRE(a.normal(0.0, 1.0) == b.normal(0.0, 1.0));
    }
}

TEST_CASE("rng: uniform stays in [0,1) with the right moments") {
    Rng rng(7);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    REQUIRE(mean == Approx(0.5).margin(0.005));
    REQUIRE(var == Approx(1.0 / 12.0).margin(0.002));
}

TEST_CASE("rng: normal matches requested moments") {
    Rng rng(11);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 2.0);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    REQUIRE(mean == Approx(3.0).margin(0.04));
    REQUIRE(sd == Approx(2.0).margin(0.03));
}

TEST_CASE("rng: a normal draw consumes exactly two engine outputs") {
    Rng a(123);
    Rng b(123);
    a.normal(0.0, 1.0);
    b.raw();
    b.raw();
    REQUIRE(a.raw() == b.raw());
}

TEST_CASE("rng: bounded integers cover their range") {
    Rng rng(5);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 4000; ++i) {
        const std::uint64_t k = rng.uniform_int(4);
        REQUIRE(k < 4);
        ++counts[static_cast<std::size_t>(k)];
    }
    for (int c : counts) {
        REQUIRE(c > 800);
        REQUIRE(c < 1200);
    }
}

TEST_CASE("unit waveform: pinned values per family") {
    // sin rises from 0 through 0.5 to 1 over half a cycle
    REQUIRE(unit_waveform(SignalFamily::Sin, 0.0) == Approx(0.0).margin(1e-12));
    REQUIRE(unit_waveform(SignalFamily::Sin, 0.25) == Approx(0.5).margin(1e-12));
    REQUIRE(unit_waveform(SignalFamily::Sin, 0.5) == Approx(1.0).margin(1e-12));
    REQUIRE(unit_waveform(SignalFamily::Sin, 0.75) == Approx(0.5).margin(1e-12));
    // step switches at half cycle
    REQUIRE(unit_waveform(SignalFamily::Step, 0.0) == 0.0);
    REQUIRE(unit_waveform(SignalFamily::Step, 0.49) == 0.0);
    REQUIRE(unit_waveform(SignalFamily::Step, 0.5) == 1.0);
    REQUIRE(unit_waveform(SignalFamily::Step, 0.99) == 1.0);
    // triangle apex at half cycle
    REQUIRE(unit_waveform(SignalFamily::Triangle, 0.0) == 0.0);
    REQUIRE(unit_waveform(SignalFamily::Triangle, 0.25) == Approx(0.5));
    REQUIRE(unit_waveform(SignalFamily::Triangle, 0.5) == Approx(1.0));
    REQUIRE(unit_waveform(SignalFamily::Triangle, 0.75) == Approx(0.5));
    // gaussian bump: unit height at center, std 1/8 of the cycle
    REQUIRE(unit_waveform(SignalFamily::Gaussian, 0.5) == Approx(1.0));
    REQUIRE(unit_waveform(SignalFamily::Gaussian, 0.25) ==
            Approx(std::exp(-2.0)).margin(1e-12));
    REQUIRE(unit_waveform(SignalFamily::Gaussian, 0.0) ==
            Approx(std::exp(-8.0)).margin(1e-12));
    REQUIRE(unit_waveform(SignalFamily::Gaussian, 0.0) < 1e-3);
}

TEST_CASE("eval: quarter-period sine values") {
    SignalSpec spec;
    spec.family = SignalFamily::Sin;
    spec.period_frames = 100.0;
    spec.phase_frames = 0.0;  // s(0) == amp_min for this family
    spec.amp_min = 0.0;
    spec.amp_max = 1.0;
    REQUIRE(eval_signal(spec, 0.0) == Approx(0.0).margin(1e-12));
    REQUIRE(eval_signal(spec, 25.0) == Approx(0.5).margin(1e-12));
    REQUIRE(eval_signal(spec, 50.0) == Approx(1.0).margin(1e-12));
}

TEST_CASE("eval: triangle apex and wrap") {
    SignalSpec spec;
    spec.family = SignalFamily::Triangle;
    spec.period_frames = 100.0;
    spec.amp_min = 0.0;
    spec.amp_max = 1.0;
    REQUIRE(eval_signal(spec, 0.0) == Approx(0.0).margin(1e-12));
    REQUIRE(eval_signal(spec, 50.0) == Approx(1.0).margin(1e-12));
    REQUIRE(eval_signal(spec, 100.0) == Approx(0.0).margin(1e-12));
}

TEST_CASE("eval: degenerate amplitude window is constant") {
    for (SignalFamily fam : {SignalFamily::Sin, SignalFamily::Step,
                             SignalFamily::Triangle, SignalFamily::Gaussian}) {
        SignalSpec spec;
        spec.family = fam;
        spec.period_frames = 37.0;
        spec.phase_frames = 5.0;
        spec.amp_min = 0.7;
        spec.amp_max = 0.7;
        for (double t : {0.0, 3.0, 17.5, 100.0})
            REQUIRE(eval_signal(spec, t) == Approx(0.7).margin(1e-12));
    }
}

TEST_CASE("eval: periodic to 1e-9 for every family") {
    for (SignalFamily fam : {SignalFamily::Sin, SignalFamily::Step,
                             SignalFamily::Triangle, SignalFamily::Gaussian}) {
        SignalSpec spec;
        spec.family = fam;
        spec.period_frames = 73.3;
        spec.phase_frames = 12.1;
        spec.amp_min = 0.2;
        spec.amp_max = 0.9;
        for (double t : {0.0, 1.5, 10.0, 33.33, 400.25}) {
            const double a = eval_signal(spec, t);
            const double b = eval_signal(spec, t + spec.period_frames);
            REQUIRE(a == Approx(b).margin(1e-9));
        }
    }
}

TEST_CASE("eval: values stay in [0,1] even with heavy noise") {
    SignalSpec spec;
    spec.family = SignalFamily::Sin;
    spec.period_frames = 50.0;
    spec.amp_min = 0.0;
    spec.amp_max = 1.0;
    spec.noise_std = 0.3;
    Rng rng(99);
    for (int t = 0; t < 10000; ++t) {
        const double v = eval_signal(spec, static_cast<double>(t), &rng);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("flattening holds the interval-start value") {
    TimeSeries ramp;
    ramp.fs = 27.0;
    for (int i = 0; i < 100; ++i) ramp.values.push_back(static_cast<double>(i));

    const TimeSeries flat = apply_flattening(ramp, {{10, 20}});
    for (int i = 0; i < 100; ++i) {
        const double expect = (i >= 10 && i < 20) ? 10.0 : static_cast<double>(i);
        REQUIRE(flat.values[static_cast<std::size_t>(i)] == expect);
    }

    const TimeSeries identity = apply_flattening(ramp, {});
    REQUIRE(identity.values == ramp.values);

    TimeSeries constant;
    constant.fs = 27.0;
    constant.values.assign(50, 0.4);
    const TimeSeries still_constant = apply_flattening(constant, {{5, 15}});
    REQUIRE(still_constant.values == constant.values);

    REQUIRE_THROWS_AS(apply_flattening(ramp, {{10, 20}, {15, 25}}), ParamError);
    REQUIRE_THROWS_AS(apply_flattening(ramp, {{90, 120}}), ParamError);
    REQUIRE_THROWS_AS(apply_flattening(ramp, {{-2, 5}}), ParamError);
    REQUIRE_THROWS_AS(apply_flattening(ramp, {{20, 20}}), ParamError);
}

TEST_CASE("eval honors flatten intervals in the spec") {
    SignalSpec spec;
    spec.family = SignalFamily::Sin;
    spec.period_frames = 45.0;
    spec.phase_frames = 7.0;
    spec.amp_min = 0.1;
    spec.amp_max = 0.8;
    SignalSpec held = spec;
    held.flatten_intervals = {{30, 40}};
    for (int t = 30; t < 40; ++t)
        REQUIRE(eval_signal(held, static_cast<double>(t)) ==
                eval_signal(spec, 30.0));
    REQUIRE(eval_signal(held, 29.0) == eval_signal(spec, 29.0));
    REQUIRE(eval_signal(held, 40.0) == eval_signal(spec, 40.0));
}

TEST_CASE("target sampling: period bounds follow the frequency prior") {
    const FrequencyRange range{0.24, 0.54};
    const double fs = 27.0;
    int family_counts[4] = {0, 0, 0, 0};
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        Rng rng(seed);
        const SignalSpec spec = sample_signal_spec(rng, range, fs);
        // 27/0.54 = 50 frames, 27/0.24 = 112.5 frames
        REQUIRE(spec.period_frames >= 50.0);
        REQUIRE(spec.period_frames <= 112.5);
        REQUIRE(range.contains(spec.frequency_hz(fs)));
        REQUIRE(spec.amp_min >= 0.0);
        REQUIRE(spec.amp_max <= 1.0);
        REQUIRE(spec.amp_min <= spec.amp_max);
        REQUIRE(spec.phase_frames >= 0.0);
        REQUIRE(spec.phase_frames < spec.period_frames);
        ++family_counts[static_cast<int>(spec.family)];
    }
    for (int c : family_counts) {
        REQUIRE(c > 400);  // 2000 draws, p=1/4, 5 sigma ~ 97
        REQUIRE(c < 600);
    }
}

TEST_CASE("target sampling: degenerate prior gives the exact period") {
    Rng rng(3);
    const SignalSpec spec =
        sample_signal_spec(rng, FrequencyRange{0.3, 0.3}, 27.0);
    REQUIRE(spec.period_frames == 90.0);
}

TEST_CASE("target sampling: deterministic under the seed") {
    Rng a(17);
    Rng b(17);
    const SignalSpec sa = sample_signal_spec(a, {0.24, 0.54}, 27.0, 0.02);
    const SignalSpec sb = sample_signal_spec(b, {0.24, 0.54}, 27.0, 0.02);
    REQUIRE(sa.family == sb.family);
    REQUIRE(sa.period_frames == sb.period_frames);
    REQUIRE(sa.phase_frames == sb.phase_frames);
    REQUIRE(sa.amp_min == sb.amp_min);
    REQUIRE(sa.amp_max == sb.amp_max);
}

TEST_CASE("target sampling: rejects invalid parameters") {
    Rng rng(1);
    REQUIRE_THROWS_AS(sample_signal_spec(rng, {0.0, 0.5}, 27.0), ParamError);
    REQUIRE_THROWS_AS(sample_signal_spec(rng, {0.5, 0.2}, 27.0), ParamError);
    REQUIRE_THROWS_AS(sample_signal_spec(rng, {0.2, 0.5}, 0.0), ParamError);
}

TEST_CASE("distractor support: two bands around the excluded interval") {
    const auto [low, high] = distractor_support(FrequencyRange{0.24, 0.54});
    REQUIRE(low.min_hz == Approx(0.06).margin(1e-12));
    REQUIRE(low.max_hz == Approx(0.216).margin(1e-12));
    REQUIRE(high.min_hz == Approx(0.594).margin(1e-12));
    REQUIRE(high.max_hz == Approx(2.16).margin(1e-12));
}

TEST_CASE("distractor sampling: frequency always outside the excluded band") {
    const FrequencyRange excluded{0.24, 0.54};
    const double fs = 27.0;
    Rng rng(31);
    int in_low = 0, in_high = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const SignalSpec spec = sample_distractor_spec(rng, excluded, fs);
        const double f = spec.frequency_hz(fs);
        REQUIRE_FALSE(excluded.contains(f));
        const bool low_band = f >= 0.06 && f <= 0.216;
        const bool high_band = f >= 0.594 && f <= 2.16;
        REQUIRE((low_band || high_band));
        if (low_band) ++in_low;
        if (high_band) ++in_high;
    }
    REQUIRE(in_low + in_high == n);
    // mass proportional to band length: 0.156 / (0.156 + 1.566) ~ 0.0906
    const double frac_low = static_cast<double>(in_low) / n;
    REQUIRE(frac_low == Approx(0.156 / 1.722).margin(0.015));
}

TEST_CASE("distractor sampling: deterministic under the seed") {
    Rng a(8);
    Rng b(8);
    const SignalSpec sa = sample_distractor_spec(a, {0.24, 0.54}, 27.0);
    const SignalSpec sb = sample_distractor_spec(b, {0.24, 0.54}, 27.0);
    REQUIRE(sa.family == sb.family);
    REQUIRE(sa.period_frames == sb.period_frames);
    REQUIRE(sa.phase_frames == sb.phase_frames);
}

TEST_CASE("sampling soundness over a hundred thousand draws") {
    const FrequencyRange range{0.24, 0.54};
    Rng rng(77);
    for (int i = 0; i < 100000; ++i) {
        const SignalSpec t = sample_signal_spec(rng, range, 27.0);
        REQUIRE(range.contains(t.frequency_hz(27.0)));
        const SignalSpec d = sample_distractor_spec(rng, range, 27.0);
        REQUIRE_FALSE(range.contains(d.frequency_hz(27.0)));
    }
}

TEST_CASE("rendering: deterministic, bounded, honors length and fs") {
    SignalSpec spec;
    spec.family = SignalFamily::Gaussian;
    spec.period_frames = 60.0;
    spec.phase_frames = 10.0;
    spec.amp_min = 0.1;
    spec.amp_max = 0.9;
    spec.noise_std = 0.05;

    Rng a(4);
    Rng b(4);
    const TimeSeries ra = render_signal(spec, 500, 27.0, a);
    const TimeSeries rb = render_signal(spec, 500, 27.0, b);
    REQUIRE(ra.size() == 500);
    REQUIRE(ra.fs == 27.0);
    REQUIRE(ra.values == rb.values);
    for (double v : ra.values) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
    Rng c(4);
    REQUIRE_THROWS_AS(render_signal(spec, -1, 27.0, c), ParamError);
}

TEST_CASE("family names round-trip") {
    for (SignalFamily fam : {SignalFamily::Sin, SignalFamily::Step,
                             SignalFamily::Triangle, SignalFamily::Gaussian})
        REQUIRE(family_from_name(family_name(fam)) == fam);
    REQUIRE_THROWS_AS(family_from_name("cosine"), ParamError);
}
