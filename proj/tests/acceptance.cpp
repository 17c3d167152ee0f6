// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// fails. Tolerances and workloads are pinned here on purpose; the unit suites
// cover the fine-grained semantics.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/anneal.hpp"
#include "core/dataset.hpp"
#include "core/demod.hpp"
#include "core/eval.hpp"
#include "core/fft.hpp"
#include "core/fir.hpp"
#include "core/gabor.hpp"
#include "core/grid.hpp"
#include "core/net.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

namespace fs = std::filesystem;
using namespace amfm;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "amfm_acceptance";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + AMFM_CLI_PATH + "\" " + args + " > \"" +
                            log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<long>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

/* 1: float Hilbert filter keeps analytic noise out of the negative band and
 * holds unit passband magnitude, quickly. */
Outcome criterion1() {
    const auto t0 = Clock::now();
    const FirFilter filter = design_hilbert_fir(51, 4.0, 512, 0.2);

    const std::vector<double> mag = fft_magnitude(filter.taps, 512);
    double mag_lo = 1.0, mag_hi = 1.0;
    for (int k = 52; k <= 204; ++k) { // inside both 0.2*pi transition bands
        mag_lo = std::min(mag_lo, mag[static_cast<size_t>(k)]);
        mag_hi = std::max(mag_hi, mag[static_cast<size_t>(k)]);
    }

    const size_t n = 1024;
    double worst_ratio = 0.0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(mix_seed(seed, "acceptance-noise"));
        std::vector<double> x(n);
        for (double& v : x) v = 2.0 * rng.uniform() - 1.0;
        const std::vector<double> y = apply_fir(x, filter);
        std::vector<cplx> z(n);
        for (size_t i = 0; i < n; ++i) z[i] = cplx(x[i], y[i]);
        const std::vector<cplx> spec = fft(z);

        double pass = 0.0, neg = 0.0;
        for (size_t k = 103; k <= 409; ++k) pass += std::norm(spec[k]); // 0.1..0.4 cycles
        for (size_t k = 615; k <= 921; ++k) neg += std::norm(spec[k]); // -0.4..-0.1 cycles
        worst_ratio = std::max(worst_ratio, neg / pass);
    }
    const double dt = seconds_since(t0);

    const bool ok = worst_ratio <= 0.02 && mag_lo >= 0.95 && mag_hi <= 1.05 && dt < 5.0;
    return {ok, "negative/passband energy " + fmt(worst_ratio) + " worst of 10 seeds (limit 0.02), "
                "passband magnitude [" + fmt(mag_lo) + ", " + fmt(mag_hi) + "] (limits 0.95/1.05), " +
                fmt(dt) + " s (limit 5)"};
}

/* 2: u=20, N=300 sine probe — near-linear phase and a suppressed mirror peak. */
Outcome criterion2() {
    const FirFilter filter = design_hilbert_fir(51, 6.0, 512, 0.1);
    const PhaseReport report = linear_phase_report(filter, 20, 300);

    const int n = 300;
    std::vector<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        x[static_cast<size_t>(i)] = std::sin(2.0 * std::numbers::pi * 20.0 * i / n);
    const std::vector<double> y = apply_fir(x, filter);
    std::vector<cplx> z(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<size_t>(i)] = cplx(x[static_cast<size_t>(i)], y[static_cast<size_t>(i)]);
    const std::vector<cplx> spec = fft(z);

    double pos = 0.0, neg = 0.0;
    for (int k = 1; k < 150; ++k) pos = std::max(pos, std::abs(spec[static_cast<size_t>(k)]));
    for (int k = 151; k < 300; ++k) neg = std::max(neg, std::abs(spec[static_cast<size_t>(k)]));
    const double peak_ratio = neg / pos;

    const bool ok = report.max_residual <= 0.05 && peak_ratio <= 0.05;
    return {ok, "phase residual " + fmt(report.max_residual) + " rad (limit 0.05), negative peak " +
                fmt(peak_ratio) + " of positive (limit 0.05)"};
}

/* 3: 8-bit annealing beats naive rounding on every seed, stays on the grid
 * and anti-symmetric, within the per-run time budget. */
Outcome criterion3() {
    const FirFilter filter = design_hilbert_fir(51, 6.0, 512, 0.2);
    const IdealResponse ideal = ideal_hilbert_magnitude(512, 0.2);
    const FirFilter rounded = quantize(filter, 8);
    const double base = objective_mse(rounded.taps, ideal);

    double worst_gain = 1e300, worst_dt = 0.0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        SaConfig config;
        config.max_iterations = 50000;
        config.rng_seed = seed;
        const auto t0 = Clock::now();
        const SaResult r = sa_refine(rounded, ideal, config);
        worst_dt = std::max(worst_dt, seconds_since(t0));
        worst_gain = std::min(worst_gain, r.objective - base);

        for (size_t k = 0; k < r.filter.taps.size(); ++k) {
            const double t = r.filter.taps[k];
            if (t * 256.0 != std::round(t * 256.0))
                return {false, "coefficient off the 2^-8 grid after refinement"};
            if (t != -r.filter.taps[r.filter.taps.size() - 1 - k])
                return {false, "anti-symmetry broken after refinement"};
        }
    }

    const bool ok = worst_gain >= 0.0 && worst_dt < 60.0;
    return {ok, "objective gain over rounding " + fmt(worst_gain) + " worst of 5 seeds (needs >= 0), "
                "slowest run " + fmt(worst_dt) + " s (limit 60)"};
}

/* 4: pure-tone demodulation recovers amplitude and frequency magnitude within
 * 10% across amplitudes and scale-2 tones. */
Outcome criterion4() {
    const FirFilter filter = design_hilbert_fir(51, 6.0, 512, 0.1);
    const KernelBank bank = build_bank(BankConfig{});
    const int n = 128, margin = 30;
    const std::pair<int, int> tones[] = {{16, -27}, {28, -14}, {31, -7}};
    const double amplitudes[] = {0.25, 0.5, 1.0};

    double worst_ia = 0.0, worst_grad = 0.0;
    for (const auto& [u, v] : tones) {
        for (const double a : amplitudes) {
            Grid img(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    img.at(r, c) = a * std::cos(2.0 * std::numbers::pi * (u * c + v * r) / n);

            const AmFmDecomposition d = demodulate(img, filter, bank, 2);
            const IfField field = instantaneous_frequency(d.ip);

            std::vector<double> ia, grad;
            for (int r = margin; r < n - margin; ++r)
                for (int c = margin; c < n - margin; ++c) {
                    ia.push_back(d.ia.at(r, c));
                    grad.push_back(std::hypot(field.dpsi_dx.at(r, c), field.dpsi_dy.at(r, c)));
                }
            const double truth = std::hypot(2.0 * std::numbers::pi * u / n,
                                            2.0 * std::numbers::pi * v / n);
            worst_ia = std::max(worst_ia, std::abs(median(ia) - a) / a);
            worst_grad = std::max(worst_grad, std::abs(median(grad) - truth) / truth);
        }
    }

    const bool ok = worst_ia <= 0.10 && worst_grad <= 0.10;
    return {ok, "median amplitude error " + fmt(worst_ia) + ", median |grad psi| error " +
                fmt(worst_grad) + " worst of 9 tone runs (limits 0.10)"};
}

/* 5: block overlaps equal per-pixel counting on random rectangles, and the
 * 18x24 corpus splits into 19440 = 12960 + 6480 blocks. */
Outcome criterion5() {
    Rng rng(mix_seed(2024, "overlap-oracle"));
    for (int i = 0; i < 100; ++i) {
        std::vector<FaceRect> rects(1 + rng.below(6));
        for (FaceRect& r : rects) {
            r.x = static_cast<int>(rng.below(520)) - 40;
            r.y = static_cast<int>(rng.below(320)) - 40;
            r.w = 1 + static_cast<int>(rng.below(140));
            r.h = 1 + static_cast<int>(rng.below(140));
        }
        const std::vector<double> got = block_overlaps(rects);

        GridT<unsigned char> mask(kGridHeight, kGridWidth);
        for (const FaceRect& r : rects)
            for (int y = std::max(0, r.y); y < std::min(kGridHeight, r.y + r.h); ++y)
                for (int x = std::max(0, r.x); x < std::min(kGridWidth, r.x + r.w); ++x)
                    mask.at(y, x) = 1;
        for (int br = 0; br < kGridRows; ++br)
            for (int bc = 0; bc < kGridCols; ++bc) {
                long pixels = 0;
                for (int y = 0; y < kBlockSize; ++y)
                    for (int x = 0; x < kBlockSize; ++x)
                        pixels += mask.at(br * kBlockSize + y, bc * kBlockSize + x);
                const double want = static_cast<double>(pixels) / (kBlockSize * kBlockSize);
                if (got[static_cast<size_t>(br * kGridCols + bc)] != want)
                    return {false, "overlap mismatch on random rectangle set " + std::to_string(i)};
            }
    }

    const fs::path corpus = work_dir() / "count_corpus";
    fs::remove_all(corpus);
    write_synth_corpus(mix_seed(7, "synth"), 18, 24, corpus.string(), 4);
    const std::vector<FrameInput> frames = enumerate_corpus(corpus.string());
    std::string warning;
    const std::vector<FaceRect> rects = corpus_annotations(corpus.string(), &warning);
    const BlockDataset ds =
        build_dataset(frames, rects, InputKind::original, FirFilter{}, KernelBank{}, false, 4);

    const std::vector<std::string> ids = dataset_video_ids(ds);
    const std::set<std::string> train_ids(ids.begin(), ids.begin() + 12);
    const std::set<std::string> test_ids(ids.begin() + 12, ids.end());
    const size_t total = ds.count();
    const size_t train_blocks = select_videos(ds, train_ids).count();
    const size_t test_blocks = select_videos(ds, test_ids).count();
    fs::remove_all(corpus);

    const bool ok = total == 19440 && train_blocks == 12960 && test_blocks == 6480;
    return {ok, "100 rectangle sets exact; corpus blocks " + std::to_string(total) +
                " split " + std::to_string(train_blocks) + "/" + std::to_string(test_blocks) +
                " (wants 19440 = 12960 + 6480)"};
}

/* 6: analytic gradients match central finite differences on five layer
 * stacks, five seeds each; the loss gradient is near-exact. */
Outcome criterion6() {
    auto conv = [](int maps, int kernel, int stride, Activation act) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::conv;
        l.maps = maps;
        l.kernel = kernel;
        l.stride = stride;
        l.act = act;
        return l;
    };
    auto pool = [](int kernel, int stride, bool max_mode) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::pool;
        l.kernel = kernel;
        l.stride = stride;
        l.pool_max = max_mode;
        return l;
    };
    auto flatten = [] {
        LayerSpec l;
        l.kind = LayerSpec::Kind::flatten;
        return l;
    };
    auto dense = [](int units, Activation act) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::dense;
        l.units = units;
        l.act = act;
        return l;
    };

    std::vector<NetSpec> specs(5);
    specs[0].input_dims = {1, 6, 6};
    specs[0].layers = {conv(2, 3, 1, Activation::selu), pool(2, 2, true), flatten(),
                       dense(3, Activation::selu), dense(2, Activation::sigmoid)};
    specs[1].input_dims = {2, 5, 5};
    specs[1].layers = {conv(3, 2, 1, Activation::tanh_act), pool(2, 2, false), flatten(),
                       dense(4, Activation::tanh_act), dense(1, Activation::sigmoid)};
    specs[2].input_dims = {1, 9, 9};
    specs[2].layers = {conv(2, 3, 2, Activation::selu), flatten(), dense(5, Activation::tanh_act),
                       dense(3, Activation::selu), dense(2, Activation::sigmoid)};
    specs[3].input_dims = {3, 4, 4};
    specs[3].layers = {conv(4, 2, 2, Activation::sigmoid), pool(2, 2, true), flatten(),
                       dense(2, Activation::tanh_act)};
    specs[4].input_dims = {10};
    specs[4].layers = {dense(7, Activation::selu), dense(4, Activation::tanh_act),
                       dense(2, Activation::sigmoid)};

    const double h = 1e-6;
    double worst = 0.0;
    for (size_t s = 0; s < specs.size(); ++s) {
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            Net net(specs[s]);
            net.init_params(mix_seed(seed, "grad-net") + s);
            Rng rng(mix_seed(seed, "grad-data") + s);
            std::vector<double> input(static_cast<size_t>(net.input_size()));
            std::vector<double> target(static_cast<size_t>(net.output_size()));
            for (double& v : input) v = 2.0 * rng.uniform() - 1.0;
            for (double& v : target) v = rng.uniform();

            std::vector<double> grad(net.param_count(), 0.0);
            net.forward_backward(input, target, grad);

            std::vector<double>& params = net.params();
            for (size_t i = 0; i < params.size(); ++i) {
                const double keep = params[i];
                params[i] = keep + h;
                const double up = mse_loss(net.forward(input), target).value;
                params[i] = keep - h;
                const double down = mse_loss(net.forward(input), target).value;
                params[i] = keep;
                const double numeric = (up - down) / (2.0 * h);
                const double rel = std::abs(grad[i] - numeric) /
                                   std::max({1e-7, std::abs(grad[i]), std::abs(numeric)});
                worst = std::max(worst, rel);
            }
        }
    }

    double worst_loss = 0.0;
    Rng rng(mix_seed(77, "grad-loss"));
    for (int i = 0; i < 5; ++i) {
        std::vector<double> pred(6), target(6);
        for (double& v : pred) v = rng.uniform();
        for (double& v : target) v = rng.uniform();
        const MseResult res = mse_loss(pred, target);
        for (size_t k = 0; k < pred.size(); ++k) {
            std::vector<double> up = pred, down = pred;
            up[k] += h;
            down[k] -= h;
            const double numeric =
                (mse_loss(up, target).value - mse_loss(down, target).value) / (2.0 * h);
            const double rel = std::abs(res.gradient[k] - numeric) /
                               std::max({1e-9, std::abs(res.gradient[k]), std::abs(numeric)});
            worst_loss = std::max(worst_loss, rel);
        }
    }

    const bool ok = worst <= 1e-3 && worst_loss <= 1e-6;
    return {ok, "worst parameter-gradient error " + fmt(worst) + " (limit 1e-3), worst loss-gradient "
                "error " + fmt(worst_loss) + " (limit 1e-6), 5 stacks x 5 seeds"};
}

/* 7: the single-block net memorizes 32 random blocks quickly. */
Outcome criterion7() {
    Net net(build_single_block_net(1));
    net.init_params(7);

    SampleSet set;
    set.input_dim = 2500;
    set.target_dim = 1;
    Rng rng(mix_seed(7, "overfit"));
    for (int i = 0; i < 32; ++i) {
        std::vector<float> block(2500);
        for (float& v : block) v = static_cast<float>(rng.uniform());
        set.inputs.push_back(std::move(block));
        set.targets.push_back({static_cast<float>(rng.uniform())});
    }

    TrainConfig config;
    config.epochs = 500;
    config.batch_size = 32;
    config.learning_rate = 1e-3;
    config.rng_seed = mix_seed(7, "overfit-train");
    config.threads = 2;
    const History history = train(net, set, SampleSet{}, config);

    int reached = -1;
    double best = 1e300;
    for (size_t e = 0; e < history.train_loss.size(); ++e) {
        best = std::min(best, history.train_loss[e]);
        if (reached < 0 && history.train_loss[e] <= 1e-3) reached = static_cast<int>(e) + 1;
    }

    const bool ok = reached > 0;
    return {ok, ok ? "loss reached " + fmt(best) + " by epoch " + std::to_string(reached) +
                         " of 500 (limit 1e-3)"
                   : "loss only reached " + fmt(best) + " in 500 epochs (limit 1e-3)"};
}

/* 8: the multi-block net has exactly 7045 parameters mapping 45 -> 45. */
Outcome criterion8() {
    const Net net(build_multi_block_net());
    const bool ok = net.param_count() == 7045 && net.input_size() == 45 && net.output_size() == 45;
    return {ok, "parameters " + std::to_string(net.param_count()) + " (wants 7045), i/o " +
                std::to_string(net.input_size()) + "/" + std::to_string(net.output_size()) +
                " (wants 45/45)"};
}

/* 9: trapezoidal and pairwise AUC agree, and monotone transforms leave the
 * curve's area untouched. */
Outcome criterion9() {
    Rng rng(mix_seed(99, "auc"));
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const size_t n = 20 + rng.below(180);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (size_t k = 0; k < n; ++k) {
            scores[k] = rng.uniform();
            if (i % 2 == 1) scores[k] = std::floor(scores[k] * 10.0) / 10.0; // force ties
            labels[k] = rng.below(2) ? 1 : 0;
        }
        labels[0] = 0;
        labels[1] = 1;

        const double trapezoid = auc(roc_curve(scores, labels));
        const double pairwise = auc_pairwise(scores, labels);
        worst = std::max(worst, std::abs(trapezoid - pairwise));

        std::vector<double> affine(n), cubic(n);
        for (size_t k = 0; k < n; ++k) {
            affine[k] = 2.0 * scores[k] + 0.5;
            cubic[k] = scores[k] * scores[k] * scores[k];
        }
        if (auc(roc_curve(affine, labels)) != trapezoid)
            return {false, "affine transform changed the area on instance " + std::to_string(i)};
        if (auc(roc_curve(cubic, labels)) != trapezoid)
            return {false, "cubic transform changed the area on instance " + std::to_string(i)};
    }

    const bool ok = worst <= 1e-9;
    return {ok, "trapezoid vs pairwise difference " + fmt(worst) +
                " worst of 50 instances (limit 1e-9); monotone transforms exact"};
}

/* 10: the end-to-end seeded pipeline on the 18x24 corpus trains a useful
 * detector single-threaded inside the wall-clock budget. */
Outcome criterion10() {
    const fs::path out = work_dir() / "pipeline_run";
    const fs::path log = work_dir() / "pipeline_run.log";
    fs::remove_all(out);

    const auto t0 = Clock::now();
    const int rc = run_cli("pipeline --seed 7 --out-dir \"" + out.string() + "\" --threads 1", log);
    const double dt = seconds_since(t0);
    fs::remove_all(out / "corpus");
    if (rc != 0)
        return {false, "pipeline exited with " + std::to_string(rc) + ", log at " + log.string()};

    nlohmann::json m;
    try {
        m = nlohmann::json::parse(slurp(out / "metrics.json"));
    } catch (const nlohmann::json::exception& e) {
        return {false, std::string("metrics.json unreadable: ") + e.what()};
    }
    const double auc_single = m.at("auc").at("single").get<double>();
    const double auc_multi = m.at("auc").at("multi").get<double>();
    const long train_blocks = m.at("blocks").at("train").get<long>() +
                              m.at("blocks").at("validation").get<long>();
    const long test_blocks = m.at("blocks").at("test").get<long>();

    const bool ok = auc_single >= 0.75 && auc_multi >= auc_single - 0.02 && dt < 900.0 &&
                    train_blocks == 12960 && test_blocks == 6480;
    return {ok, "held-out auc single " + fmt(auc_single) + " (limit 0.75), multi " + fmt(auc_multi) +
                " (limit single - 0.02), blocks " + std::to_string(train_blocks) + "/" +
                std::to_string(test_blocks) + ", " + fmt(dt / 60.0) + " min (limit 15)"};
}

/* 11: the same seeded pipeline twice gives byte-identical artifacts. */
Outcome criterion11() {
    const fs::path dir = work_dir() / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config = dir / "run.json";
    {
        std::ofstream out(config);
        out << R"({
  "filter": {"sa": {"max_iterations": 3000}},
  "dataset": {"input_kind": "fm", "synth": {"videos": 3, "frames_per_video": 4}},
  "split": {"validation_fraction": 0.34},
  "train": {"epochs": 6, "batch_size": 32, "threads": 2},
  "multi_train": {"epochs": 6, "batch_size": 4, "threads": 2}
})";
    }

    for (const char* run : {"a", "b"}) {
        const int rc = run_cli("pipeline --config \"" + config.string() + "\" --seed 7 --threads 2"
                               " --out-dir \"" + (dir / run).string() + "\"",
                               dir / (std::string(run) + ".log"));
        if (rc != 0)
            return {false, std::string("run ") + run + " exited with " + std::to_string(rc)};
    }

    size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        ++files;
        const fs::path rel = fs::relative(entry.path(), dir / "a");
        const fs::path twin = dir / "b" / rel;
        if (!fs::exists(twin)) return {false, "second run lacks " + rel.string()};
        if (slurp(entry.path()) != slurp(twin))
            return {false, "artifact differs between runs: " + rel.string()};
    }
    size_t files_b = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "b"))
        files_b += entry.is_regular_file() ? 1 : 0;
    if (files_b != files)
        return {false, "runs produced different file counts: " + std::to_string(files) + " vs " +
                       std::to_string(files_b)};

    return {true, "two seeded runs byte-identical across " + std::to_string(files) + " artifacts"};
}

} // namespace

int main() {
    const std::pair<int, Outcome (*)()> criteria[] = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
        {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8},
        {9, criterion9}, {10, criterion10}, {11, criterion11},
    };

    int failures = 0;
    for (const auto& [id, fn] : criteria) {
        Outcome outcome;
        try {
            outcome = fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("unexpected exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s\n", outcome.ok ? "PASS" : "FAIL", id,
                    outcome.detail.c_str());
        std::fflush(stdout);
        failures += outcome.ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
