// Command-line front end over the shared library: filter design, filterbank
// construction, demodulation, dataset handling, training, evaluation, and the
// end-to-end pipeline. Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "amfm/amfm.h"

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CliError {
    int code;
    std::string message;
};

int exit_code_for(int status) {
    switch (status) {
        case AMFM_OK: return 0;
        case AMFM_ERR_PARAM: return 1;
        case AMFM_ERR_DATA: return 2;
        case AMFM_ERR_IO: return 2;
        case AMFM_ERR_NUMERIC: return 3;
        default: return 1;
    }
}

void check(int status) {
    if (status != AMFM_OK) throw CliError{exit_code_for(status), amfm_last_error()};
}

void warn_if_any() {
    const char* w = amfm_last_warning();
    if (w && *w) std::fprintf(stderr, "warning: %s\n", w);
}

template <typename T, void (*Free)(T*)>
class Handle {
public:
    Handle() = default;
    ~Handle() { reset(); }
    Handle(Handle&& o) noexcept : p_(o.p_) { o.p_ = nullptr; }
    Handle& operator=(Handle&& o) noexcept {
        std::swap(p_, o.p_);
        return *this;
    }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;

    operator T*() const { return p_; }
    T* get() const { return p_; }
    T** out() {
        reset();
        return &p_;
    }
    void reset() {
        if (p_) Free(p_);
        p_ = nullptr;
    }

private:
    T* p_ = nullptr;
};

using FilterH = Handle<AmfmFilter, amfm_filter_free>;
using BankH = Handle<AmfmBank, amfm_bank_free>;
using ImageH = Handle<AmfmImage, amfm_image_free>;
using DecompH = Handle<AmfmDecomp, amfm_decomp_free>;
using DatasetH = Handle<AmfmDataset, amfm_dataset_free>;
using NetH = Handle<AmfmNet, amfm_net_free>;
using HistoryH = Handle<AmfmHistory, amfm_history_free>;
using RocH = Handle<AmfmRoc, amfm_roc_free>;

/* ---- run configuration ---- */

struct SaCfg {
    int max_iterations = 50000;
    double step = 0.0;
    double c_exponent = 0.0;
};

struct FilterCfg {
    int taps = 51;
    double kaiser_beta = 6.0;
    double transition = 0.2;
    int n_fft = 512;
    int bits = 8;
    SaCfg sa;
};

struct SynthCfg {
    int videos = 18;
    int frames_per_video = 24;
};

struct DatasetCfg {
    std::string corpus_dir; // empty -> synthesize under <out_dir>/corpus
    std::string input_kind = "fm";
    bool mean_decimation = false;
    SynthCfg synth;
};

struct SplitCfg {
    std::vector<std::string> train_videos; // both empty -> first 2/3 train
    std::vector<std::string> test_videos;
    double validation_fraction = 1.0 / 6.0;
};

struct TrainCfg {
    int epochs = 80;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool shuffle = true;
    int threads = 1;
};

struct EvalCfg {
    double pred_threshold = 0.15;
    double gt_threshold = 0.0;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = "run";
    FilterCfg filter;
    AmfmBankConfig bank{};
    DatasetCfg dataset;
    SplitCfg split;
    TrainCfg train_single;
    TrainCfg train_multi;
    EvalCfg eval;
};

RunConfig default_run_config() {
    RunConfig cfg;
    amfm_bank_config_default(&cfg.bank);
    // The multi stage sees one sample per frame, ~45x fewer than the block
    // stage; smaller batches and more epochs keep its step count comparable.
    cfg.train_multi.epochs = 200;
    cfg.train_multi.batch_size = 4;
    return cfg;
}

/* ---- config file parsing (unknown keys rejected) ---- */

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError{2, "cannot open config file: " + path};
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CliError{2, "config " + path + ": " + e.what()};
    }
    if (!j.is_object()) throw CliError{2, "config " + path + ": root must be an object"};
    return j;
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known) throw CliError{2, "unknown config key \"" + it.key() + "\" in " + where};
    }
}

const json& section(const json& obj, const std::string& where, const char* key) {
    const json& s = obj.at(key);
    if (!s.is_object()) throw CliError{2, "config section " + where + "." + key + " must be an object"};
    return s;
}

template <typename T>
void read_field(const json& obj, const std::string& where, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw CliError{2, "config field " + where + "." + key + " has the wrong type"};
    }
}

void read_train_section(const json& t, const std::string& where, TrainCfg& out) {
    check_keys(t, where, {"epochs", "batch_size", "learning_rate", "optimizer", "beta1",
                          "beta2", "epsilon", "shuffle", "threads"});
    read_field(t, where, "epochs", out.epochs);
    read_field(t, where, "batch_size", out.batch_size);
    read_field(t, where, "learning_rate", out.learning_rate);
    read_field(t, where, "optimizer", out.optimizer);
    read_field(t, where, "beta1", out.beta1);
    read_field(t, where, "beta2", out.beta2);
    read_field(t, where, "epsilon", out.epsilon);
    read_field(t, where, "shuffle", out.shuffle);
    read_field(t, where, "threads", out.threads);
}

void apply_config(RunConfig& cfg, const json& j) {
    check_keys(j, "config", {"seed", "threads", "out_dir", "filter", "bank", "dataset",
                             "split", "train", "multi_train", "eval"});
    read_field(j, "config", "seed", cfg.seed);
    read_field(j, "config", "threads", cfg.threads);
    read_field(j, "config", "out_dir", cfg.out_dir);

    if (j.contains("filter")) {
        const json& f = section(j, "config", "filter");
        check_keys(f, "filter", {"taps", "kaiser_beta", "transition", "n_fft", "bits", "sa"});
        read_field(f, "filter", "taps", cfg.filter.taps);
        read_field(f, "filter", "kaiser_beta", cfg.filter.kaiser_beta);
        read_field(f, "filter", "transition", cfg.filter.transition);
        read_field(f, "filter", "n_fft", cfg.filter.n_fft);
        read_field(f, "filter", "bits", cfg.filter.bits);
        if (f.contains("sa")) {
            const json& s = section(f, "filter", "sa");
            check_keys(s, "filter.sa", {"max_iterations", "step", "c_exponent"});
            read_field(s, "filter.sa", "max_iterations", cfg.filter.sa.max_iterations);
            read_field(s, "filter.sa", "step", cfg.filter.sa.step);
            read_field(s, "filter.sa", "c_exponent", cfg.filter.sa.c_exponent);
        }
    }
    if (j.contains("bank")) {
        const json& b = section(j, "config", "bank");
        check_keys(b, "bank", {"orientations", "theta_step", "scale2_theta0", "omega",
                               "kernel_size", "sigma_x", "sigma_y"});
        read_field(b, "bank", "orientations", cfg.bank.orientations);
        read_field(b, "bank", "theta_step", cfg.bank.theta_step);
        read_field(b, "bank", "scale2_theta0", cfg.bank.scale2_theta0);
        read_field(b, "bank", "omega", cfg.bank.omega);
        read_field(b, "bank", "kernel_size", cfg.bank.kernel_size);
        read_field(b, "bank", "sigma_x", cfg.bank.sigma_x);
        read_field(b, "bank", "sigma_y", cfg.bank.sigma_y);
    }
    if (j.contains("dataset")) {
        const json& d = section(j, "config", "dataset");
        check_keys(d, "dataset", {"corpus_dir", "input_kind", "mean_decimation", "synth"});
        read_field(d, "dataset", "corpus_dir", cfg.dataset.corpus_dir);
        read_field(d, "dataset", "input_kind", cfg.dataset.input_kind);
        read_field(d, "dataset", "mean_decimation", cfg.dataset.mean_decimation);
        if (d.contains("synth")) {
            const json& s = section(d, "dataset", "synth");
            check_keys(s, "dataset.synth", {"videos", "frames_per_video"});
            read_field(s, "dataset.synth", "videos", cfg.dataset.synth.videos);
            read_field(s, "dataset.synth", "frames_per_video", cfg.dataset.synth.frames_per_video);
        }
    }
    if (j.contains("split")) {
        const json& s = section(j, "config", "split");
        check_keys(s, "split", {"train_videos", "test_videos", "validation_fraction"});
        read_field(s, "split", "train_videos", cfg.split.train_videos);
        read_field(s, "split", "test_videos", cfg.split.test_videos);
        read_field(s, "split", "validation_fraction", cfg.split.validation_fraction);
    }
    if (j.contains("train")) read_train_section(section(j, "config", "train"), "train", cfg.train_single);
    if (j.contains("multi_train"))
        read_train_section(section(j, "config", "multi_train"), "multi_train", cfg.train_multi);
    if (j.contains("eval")) {
        const json& e = section(j, "config", "eval");
        check_keys(e, "eval", {"pred_threshold", "gt_threshold"});
        read_field(e, "eval", "pred_threshold", cfg.eval.pred_threshold);
        read_field(e, "eval", "gt_threshold", cfg.eval.gt_threshold);
    }
}

/* ---- shared helpers ---- */

std::vector<const char*> c_strs(const std::vector<std::string>& v) {
    std::vector<const char*> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i].c_str();
    return out;
}

std::vector<std::string> dataset_videos(AmfmDataset* ds) {
    size_t n = 0;
    check(amfm_dataset_video_count(ds, &n));
    std::vector<std::string> ids(n);
    char buf[512];
    for (size_t i = 0; i < n; ++i) {
        check(amfm_dataset_video_id(ds, i, buf, sizeof buf));
        ids[i] = buf;
    }
    return ids;
}

std::vector<double> dataset_targets(AmfmDataset* ds) {
    size_t n = 0;
    check(amfm_dataset_count(ds, &n));
    std::vector<double> targets(n);
    for (size_t i = 0; i < n; ++i) {
        float v = 0.0f;
        check(amfm_dataset_target(ds, i, &v));
        targets[i] = v;
    }
    return targets;
}

DatasetH select_dataset(AmfmDataset* ds, const std::vector<std::string>& ids) {
    const std::vector<const char*> ptrs = c_strs(ids);
    DatasetH out;
    check(amfm_dataset_select(ds, ptrs.data(), ptrs.size(), out.out()));
    return out;
}

AmfmTrainConfig to_c_train(const TrainCfg& t, std::uint64_t rng_seed) {
    AmfmTrainConfig c;
    amfm_train_config_default(&c);
    c.epochs = t.epochs;
    c.batch_size = t.batch_size;
    c.learning_rate = t.learning_rate;
    c.optimizer = t.optimizer.c_str();
    c.beta1 = t.beta1;
    c.beta2 = t.beta2;
    c.epsilon = t.epsilon;
    c.rng_seed = rng_seed;
    c.shuffle = t.shuffle ? 1 : 0;
    c.threads = t.threads;
    return c;
}

void print_history_tail(const char* tag, AmfmHistory* history) {
    size_t n = 0;
    check(amfm_history_epochs(history, &n));
    if (n == 0) return;
    double row[4];
    check(amfm_history_row(history, n - 1, row));
    std::printf("train %s: epochs %zu loss %.9g val_loss %.9g auc %.9g val_auc %.9g\n", tag, n,
                row[0], row[1], row[2], row[3]);
}

// Overlay for the first (video, frame) of the dataset using scores aligned
// with its block order.
void write_first_overlay(AmfmDataset* ds, const std::vector<double>& scores,
                         const EvalCfg& eval, const std::string& out_dir) {
    size_t n_frames = 0;
    check(amfm_dataset_frame_count(ds, &n_frames));
    if (n_frames == 0) return;
    char video[512];
    int frame = 0;
    check(amfm_dataset_frame_info(ds, 0, video, sizeof video, &frame));

    double cell_scores[AMFM_BLOCKS_PER_FRAME] = {0};
    double cell_targets[AMFM_BLOCKS_PER_FRAME] = {0};
    check(amfm_dataset_frame_targets(ds, video, frame, cell_targets, AMFM_BLOCKS_PER_FRAME));
    size_t n = 0;
    check(amfm_dataset_count(ds, &n));
    for (size_t i = 0; i < n; ++i) {
        char v[512];
        int f = 0, br = 0, bc = 0;
        check(amfm_dataset_provenance(ds, i, v, sizeof v, &f, &br, &bc));
        if (f == frame && std::strcmp(v, video) == 0)
            cell_scores[br * AMFM_GRID_COLS + bc] = scores[i];
    }

    int marks[AMFM_BLOCKS_PER_FRAME];
    check(amfm_block_marks(cell_scores, cell_targets, eval.pred_threshold, eval.gt_threshold, marks));
    ImageH plane, view;
    check(amfm_dataset_frame_plane(ds, video, frame, 0, plane.out()));
    check(amfm_image_rescaled(plane, view.out()));
    const std::string path =
        out_dir + "/overlay_" + video + "_" + std::to_string(frame) + ".ppm";
    check(amfm_overlay_write(view, marks, path.c_str()));
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError{2, "cannot write " + path};
    out << content;
    if (!out) throw CliError{2, "cannot write " + path};
}

/* ---- subcommand runners ---- */

struct DesignArgs {
    std::string config_path;
    std::string out_path;
    FilterCfg filter;
    std::uint64_t seed = 0;
    bool float_only = false;
};

void run_design_filter(const DesignArgs& a) {
    FilterH designed;
    check(amfm_design_hilbert(a.filter.taps, a.filter.kaiser_beta, a.filter.n_fft,
                              a.filter.transition, designed.out()));
    double obj_float = 0.0;
    check(amfm_objective(designed, a.filter.n_fft, a.filter.transition, &obj_float));
    std::printf("designed %d taps, objective %.9g\n", a.filter.taps, obj_float);

    if (a.float_only) {
        check(amfm_filter_save(designed, a.out_path.c_str()));
        std::printf("wrote %s\n", a.out_path.c_str());
        return;
    }

    FilterH rounded;
    check(amfm_quantize(designed, a.filter.bits, rounded.out()));
    double obj_rounded = 0.0;
    check(amfm_objective(rounded, a.filter.n_fft, a.filter.transition, &obj_rounded));

    AmfmSaConfig sa;
    amfm_sa_config_default(&sa);
    sa.max_iterations = a.filter.sa.max_iterations;
    sa.step = a.filter.sa.step;
    sa.c_exponent = a.filter.sa.c_exponent;
    sa.rng_seed = amfm_mix_seed(a.seed, "filter-sa");
    AmfmSaInfo info{};
    FilterH refined;
    check(amfm_sa_refine(rounded, a.filter.n_fft, a.filter.transition, &sa, refined.out(), &info));
    std::printf("quantized to %d bits: objective %.9g -> %.9g (accepted %d, c %.9g)\n",
                a.filter.bits, obj_rounded, info.objective, info.accepted, info.c_used);

    check(amfm_filter_save(refined, a.out_path.c_str()));
    std::printf("wrote %s\n", a.out_path.c_str());
}

struct FilterbankArgs {
    std::string config_path;
    std::string out_path;
    AmfmBankConfig bank{};
    bool report = false;
    int report_n_fft = 128;
};

void run_filterbank(const FilterbankArgs& a) {
    BankH bank;
    check(amfm_bank_build(&a.bank, bank.out()));
    if (!a.out_path.empty()) {
        check(amfm_bank_save(bank, a.out_path.c_str()));
        std::printf("wrote %s\n", a.out_path.c_str());
    }
    if (a.report) {
        int channels = 0;
        check(amfm_bank_channels(bank, &channels));
        std::vector<AmfmChannelReport> rows(static_cast<size_t>(channels));
        check(amfm_bank_report(bank, a.report_n_fft, rows.data(), rows.size()));
        std::printf("channel scale theta    peak_fy   peak_fx   |peak|    dc_gain\n");
        for (int i = 0; i < channels; ++i) {
            double theta = 0, sx = 0, sy = 0, omega = 0;
            int scale = 0;
            check(amfm_bank_channel_params(bank, i, &theta, &sx, &sy, &omega, &scale));
            const AmfmChannelReport& r = rows[static_cast<size_t>(i)];
            std::printf("%7d %5d %-8.4g %-9.4g %-9.4g %-9.4g %.3g\n", i, scale, theta,
                        r.peak_fy, r.peak_fx, r.peak_magnitude, r.dc_gain);
        }
    }
}

struct DemodArgs {
    std::string image_path;
    std::string filter_path;
    std::string bank_path;
    std::string out_dir;
    int threads = 1;
    bool decimate = false;
    bool mean = false;
};

void run_demodulate(const DemodArgs& a) {
    FilterH filter;
    check(amfm_filter_load(a.filter_path.c_str(), filter.out()));
    BankH bank;
    check(amfm_bank_load(a.bank_path.c_str(), bank.out()));
    ImageH image;
    check(amfm_image_load(a.image_path.c_str(), image.out()));
    if (a.decimate) {
        ImageH small;
        check(amfm_image_decimate(image, a.mean ? 1 : 0, small.out()));
        image = std::move(small);
    }
    DecompH decomp;
    check(amfm_demodulate(image, filter, bank, a.threads, decomp.out()));

    std::filesystem::create_directories(a.out_dir);
    const std::pair<int, const char*> planes[] = {
        {AMFM_PLANE_IA, "ia"},       {AMFM_PLANE_IP, "ip"},   {AMFM_PLANE_FM, "fm"},
        {AMFM_PLANE_CHANNEL, "channel"}, {AMFM_PLANE_IF_X, "if_x"}, {AMFM_PLANE_IF_Y, "if_y"},
    };
    for (const auto& [plane, name] : planes) {
        ImageH raw, view;
        check(amfm_decomp_plane(decomp, plane, raw.out()));
        check(amfm_image_rescaled(raw, view.out()));
        check(amfm_image_save_pgm(view, (a.out_dir + "/" + name + ".pgm").c_str()));
    }
    int h = 0, w = 0;
    check(amfm_decomp_size(decomp, &h, &w));
    std::printf("demodulated %dx%d, wrote 6 planes to %s\n", h, w, a.out_dir.c_str());
}

struct SynthArgs {
    std::string out_dir;
    int videos = 18;
    int frames = 24;
    std::uint64_t seed = 0;
    int threads = 1;
};

void run_dataset_synth(const SynthArgs& a) {
    check(amfm_synth_corpus(amfm_mix_seed(a.seed, "synth"), a.videos, a.frames,
                            a.out_dir.c_str(), a.threads));
    std::printf("wrote %d videos x %d frames to %s\n", a.videos, a.frames, a.out_dir.c_str());
}

struct BuildArgs {
    std::string corpus_dir;
    std::string input_kind = "fm";
    std::string filter_path;
    std::string bank_path;
    std::string out_path;
    bool mean = false;
    int threads = 1;
};

void run_dataset_build(const BuildArgs& a) {
    FilterH filter;
    BankH bank;
    if (a.input_kind != "original") {
        if (a.filter_path.empty() || a.bank_path.empty())
            throw CliError{1, "input kind \"" + a.input_kind + "\" needs --filter and --bank"};
        check(amfm_filter_load(a.filter_path.c_str(), filter.out()));
        check(amfm_bank_load(a.bank_path.c_str(), bank.out()));
    }
    DatasetH ds;
    check(amfm_dataset_build(a.corpus_dir.c_str(), a.input_kind.c_str(), filter, bank,
                             a.mean ? 1 : 0, a.threads, ds.out()));
    warn_if_any();
    check(amfm_dataset_save(ds, a.out_path.c_str()));
    size_t count = 0;
    check(amfm_dataset_count(ds, &count));
    std::printf("wrote %zu blocks (%s) to %s\n", count, a.input_kind.c_str(), a.out_path.c_str());
}

void run_dataset_inspect(const std::string& path) {
    DatasetH ds;
    check(amfm_dataset_load(path.c_str(), ds.out()));
    size_t count = 0;
    int h = 0, w = 0, channels = 0;
    char kind[32];
    check(amfm_dataset_count(ds, &count));
    check(amfm_dataset_dims(ds, &h, &w, &channels));
    check(amfm_dataset_input_kind(ds, kind, sizeof kind));
    size_t frames = 0;
    check(amfm_dataset_frame_count(ds, &frames));
    const std::vector<std::string> videos = dataset_videos(ds);
    const std::vector<double> targets = dataset_targets(ds);
    size_t positive = 0;
    double sum = 0.0;
    for (double t : targets) {
        if (t > 0.0) ++positive;
        sum += t;
    }
    std::printf("blocks %zu\n", count);
    std::printf("block_dims %dx%dx%d\n", h, w, channels);
    std::printf("input_kind %s\n", kind);
    std::printf("videos %zu\n", videos.size());
    std::printf("frames %zu\n", frames);
    std::printf("positive_blocks %zu\n", positive);
    std::printf("mean_target %.9g\n", count ? sum / static_cast<double>(count) : 0.0);
}

struct TrainArgs {
    std::string config_path;
    std::string dataset_path;
    std::string val_path;
    std::string mode = "single";
    std::string single_net_path;
    std::string out_path;
    std::string history_path;
    std::string loss_svg_path;
    TrainCfg train;
    std::uint64_t seed = 0;
};

void run_train(const TrainArgs& a) {
    DatasetH train_ds;
    check(amfm_dataset_load(a.dataset_path.c_str(), train_ds.out()));
    DatasetH val_ds;
    if (!a.val_path.empty()) check(amfm_dataset_load(a.val_path.c_str(), val_ds.out()));

    NetH net;
    HistoryH history;
    if (a.mode == "single") {
        int h = 0, w = 0, channels = 0;
        check(amfm_dataset_dims(train_ds, &h, &w, &channels));
        check(amfm_net_single(channels, net.out()));
        const std::uint64_t stage_seed = amfm_mix_seed(a.seed, "train-single");
        check(amfm_net_init(net, stage_seed));
        const AmfmTrainConfig c = to_c_train(a.train, stage_seed);
        check(amfm_train_single(net, train_ds, val_ds.get(), &c, history.out()));
    } else {
        if (a.single_net_path.empty())
            throw CliError{1, "--mode multi needs --single-net"};
        NetH single;
        check(amfm_net_load(a.single_net_path.c_str(), single.out()));
        check(amfm_net_multi(net.out()));
        const std::uint64_t stage_seed = amfm_mix_seed(a.seed, "train-multi");
        check(amfm_net_init(net, stage_seed));
        const AmfmTrainConfig c = to_c_train(a.train, stage_seed);
        check(amfm_train_multi(net, single, train_ds, val_ds.get(), &c, history.out()));
    }

    check(amfm_net_save(net, a.out_path.c_str()));
    if (!a.history_path.empty()) check(amfm_history_save_csv(history, a.history_path.c_str()));
    if (!a.loss_svg_path.empty()) check(amfm_history_save_svg(history, a.loss_svg_path.c_str()));
    print_history_tail(a.mode.c_str(), history);
    std::printf("wrote %s\n", a.out_path.c_str());
}

struct EvaluateArgs {
    std::string dataset_path;
    std::string net_path;
    std::string multi_path;
    std::string out_dir;
    EvalCfg eval;
    int threads = 1;
};

void run_evaluate(const EvaluateArgs& a) {
    DatasetH ds;
    check(amfm_dataset_load(a.dataset_path.c_str(), ds.out()));
    NetH net_single;
    check(amfm_net_load(a.net_path.c_str(), net_single.out()));
    NetH net_multi;
    if (!a.multi_path.empty()) check(amfm_net_load(a.multi_path.c_str(), net_multi.out()));

    size_t n = 0;
    check(amfm_dataset_count(ds, &n));
    std::vector<double> scores_single(n);
    check(amfm_predict(net_single, ds, a.threads, scores_single.data(), scores_single.size()));
    std::vector<double> scores_multi;
    if (net_multi.get()) {
        scores_multi.resize(n);
        check(amfm_refine(net_single, net_multi, ds, a.threads, scores_multi.data(),
                          scores_multi.size()));
    }
    const std::vector<double>& primary = net_multi.get() ? scores_multi : scores_single;
    const std::vector<double> targets = dataset_targets(ds);

    std::filesystem::create_directories(a.out_dir);
    RocH roc;
    check(amfm_roc_build(primary.data(), targets.data(), n, a.eval.gt_threshold, roc.out()));
    double auc_primary = 0.0;
    check(amfm_roc_auc(roc, &auc_primary));
    check(amfm_roc_save_csv(roc, (a.out_dir + "/roc.csv").c_str()));
    check(amfm_roc_save_svg(roc, (a.out_dir + "/roc.svg").c_str()));

    double auc_single = auc_primary;
    if (net_multi.get()) {
        RocH roc_single;
        check(amfm_roc_build(scores_single.data(), targets.data(), n, a.eval.gt_threshold,
                             roc_single.out()));
        check(amfm_roc_auc(roc_single, &auc_single));
    }

    long counts[4] = {0, 0, 0, 0};
    check(amfm_confusion(primary.data(), targets.data(), n, a.eval.pred_threshold,
                         a.eval.gt_threshold, counts));
    write_first_overlay(ds, primary, a.eval, a.out_dir);

    ordered_json m;
    m["blocks"] = n;
    m["auc"]["single"] = auc_single;
    if (net_multi.get()) m["auc"]["multi"] = auc_primary;
    m["confusion"] = {{"pred_threshold", a.eval.pred_threshold},
                      {"gt_threshold", a.eval.gt_threshold},
                      {"tp", counts[0]},
                      {"fp", counts[1]},
                      {"tn", counts[2]},
                      {"fn", counts[3]}};
    write_text_file(a.out_dir + "/metrics.json", m.dump(2) + "\n");

    if (net_multi.get())
        std::printf("auc single %.9g multi %.9g\n", auc_single, auc_primary);
    else
        std::printf("auc %.9g\n", auc_primary);
    std::printf("wrote %s/metrics.json\n", a.out_dir.c_str());
}

void run_pipeline(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string out = cfg.out_dir;

    // Fixed-point Hilbert filter.
    FilterH designed;
    check(amfm_design_hilbert(cfg.filter.taps, cfg.filter.kaiser_beta, cfg.filter.n_fft,
                              cfg.filter.transition, designed.out()));
    FilterH rounded;
    check(amfm_quantize(designed, cfg.filter.bits, rounded.out()));
    double obj_rounded = 0.0;
    check(amfm_objective(rounded, cfg.filter.n_fft, cfg.filter.transition, &obj_rounded));
    AmfmSaConfig sa;
    amfm_sa_config_default(&sa);
    sa.max_iterations = cfg.filter.sa.max_iterations;
    sa.step = cfg.filter.sa.step;
    sa.c_exponent = cfg.filter.sa.c_exponent;
    sa.rng_seed = amfm_mix_seed(cfg.seed, "filter-sa");
    AmfmSaInfo info{};
    FilterH filter;
    check(amfm_sa_refine(rounded, cfg.filter.n_fft, cfg.filter.transition, &sa, filter.out(), &info));
    check(amfm_filter_save(filter, (out + "/filter.txt").c_str()));
    std::printf("filter: objective %.9g -> %.9g (accepted %d)\n", obj_rounded, info.objective,
                info.accepted);

    // Filterbank.
    BankH bank;
    check(amfm_bank_build(&cfg.bank, bank.out()));
    check(amfm_bank_save(bank, (out + "/bank.txt").c_str()));

    // Corpus: synthesize one when no directory is configured.
    std::string corpus = cfg.dataset.corpus_dir;
    if (corpus.empty()) {
        corpus = out + "/corpus";
        check(amfm_synth_corpus(amfm_mix_seed(cfg.seed, "synth"), cfg.dataset.synth.videos,
                                cfg.dataset.synth.frames_per_video, corpus.c_str(), cfg.threads));
        std::printf("corpus: %d videos x %d frames\n", cfg.dataset.synth.videos,
                    cfg.dataset.synth.frames_per_video);
    }

    // Demodulated block dataset.
    DatasetH full;
    check(amfm_dataset_build(corpus.c_str(), cfg.dataset.input_kind.c_str(), filter, bank,
                             cfg.dataset.mean_decimation ? 1 : 0, cfg.threads, full.out()));
    warn_if_any();
    size_t n_blocks = 0;
    check(amfm_dataset_count(full, &n_blocks));
    std::printf("dataset: %zu blocks (%s)\n", n_blocks, cfg.dataset.input_kind.c_str());

    // Train / validation / test videos.
    const std::vector<std::string> ids = dataset_videos(full);
    std::vector<std::string> train_ids = cfg.split.train_videos;
    std::vector<std::string> test_ids = cfg.split.test_videos;
    if (train_ids.empty() && test_ids.empty()) {
        const size_t n_train = ids.size() * 2 / 3;
        train_ids.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
        test_ids.assign(ids.begin() + static_cast<long>(n_train), ids.end());
    }
    for (const std::string& id : train_ids)
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
            throw CliError{2, "train video not in corpus: " + id};
    for (const std::string& id : test_ids)
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
            throw CliError{2, "test video not in corpus: " + id};
    if (train_ids.empty()) throw CliError{2, "split has no training videos"};
    if (test_ids.empty()) throw CliError{2, "split has no test videos"};

    std::vector<int> val_flags(train_ids.size(), 0);
    const std::vector<const char*> train_ptrs = c_strs(train_ids);
    const std::vector<const char*> test_ptrs = c_strs(test_ids);
    check(amfm_split_plan(train_ptrs.data(), train_ptrs.size(), test_ptrs.data(),
                          test_ptrs.size(), cfg.split.validation_fraction, val_flags.data()));
    std::vector<std::string> fit_ids, val_ids;
    for (size_t i = 0; i < train_ids.size(); ++i)
        (val_flags[i] ? val_ids : fit_ids).push_back(train_ids[i]);
    if (fit_ids.empty()) throw CliError{2, "validation slice consumed every training video"};

    DatasetH train_ds = select_dataset(full, fit_ids);
    DatasetH test_ds = select_dataset(full, test_ids);
    DatasetH val_ds;
    if (!val_ids.empty()) val_ds = select_dataset(full, val_ids);

    // Single-block regressor.
    int h = 0, w = 0, channels = 0;
    check(amfm_dataset_dims(full, &h, &w, &channels));
    NetH net_single;
    check(amfm_net_single(channels, net_single.out()));
    const std::uint64_t seed_single = amfm_mix_seed(cfg.seed, "train-single");
    check(amfm_net_init(net_single, seed_single));
    const AmfmTrainConfig tc_single = to_c_train(cfg.train_single, seed_single);
    HistoryH hist_single;
    check(amfm_train_single(net_single, train_ds, val_ds.get(), &tc_single, hist_single.out()));
    check(amfm_net_save(net_single, (out + "/net_single.afmn").c_str()));
    check(amfm_history_save_csv(hist_single, (out + "/history_single.csv").c_str()));
    check(amfm_history_save_svg(hist_single, (out + "/loss_single.svg").c_str()));
    print_history_tail("single", hist_single);

    // Multi-block refinement net over the single net's frame scores.
    NetH net_multi;
    check(amfm_net_multi(net_multi.out()));
    const std::uint64_t seed_multi = amfm_mix_seed(cfg.seed, "train-multi");
    check(amfm_net_init(net_multi, seed_multi));
    const AmfmTrainConfig tc_multi = to_c_train(cfg.train_multi, seed_multi);
    HistoryH hist_multi;
    check(amfm_train_multi(net_multi, net_single, train_ds, val_ds.get(), &tc_multi,
                           hist_multi.out()));
    check(amfm_net_save(net_multi, (out + "/net_multi.afmn").c_str()));
    check(amfm_history_save_csv(hist_multi, (out + "/history_multi.csv").c_str()));
    check(amfm_history_save_svg(hist_multi, (out + "/loss_multi.svg").c_str()));
    print_history_tail("multi", hist_multi);

    // Held-out evaluation.
    size_t n_test = 0;
    check(amfm_dataset_count(test_ds, &n_test));
    std::vector<double> scores_single(n_test), scores_multi(n_test);
    check(amfm_predict(net_single, test_ds, cfg.threads, scores_single.data(), n_test));
    check(amfm_refine(net_single, net_multi, test_ds, cfg.threads, scores_multi.data(), n_test));
    const std::vector<double> targets = dataset_targets(test_ds);

    RocH roc_single, roc_multi;
    check(amfm_roc_build(scores_single.data(), targets.data(), n_test, cfg.eval.gt_threshold,
                         roc_single.out()));
    check(amfm_roc_build(scores_multi.data(), targets.data(), n_test, cfg.eval.gt_threshold,
                         roc_multi.out()));
    double auc_single = 0.0, auc_multi = 0.0;
    check(amfm_roc_auc(roc_single, &auc_single));
    check(amfm_roc_auc(roc_multi, &auc_multi));
    check(amfm_roc_save_csv(roc_single, (out + "/roc_single.csv").c_str()));
    check(amfm_roc_save_svg(roc_single, (out + "/roc_single.svg").c_str()));
    check(amfm_roc_save_csv(roc_multi, (out + "/roc_multi.csv").c_str()));
    check(amfm_roc_save_svg(roc_multi, (out + "/roc_multi.svg").c_str()));

    long counts[4] = {0, 0, 0, 0};
    check(amfm_confusion(scores_multi.data(), targets.data(), n_test, cfg.eval.pred_threshold,
                         cfg.eval.gt_threshold, counts));
    write_first_overlay(test_ds, scores_multi, cfg.eval, out);

    size_t n_train_blocks = 0, n_val_blocks = 0;
    check(amfm_dataset_count(train_ds, &n_train_blocks));
    if (val_ds.get()) check(amfm_dataset_count(val_ds, &n_val_blocks));

    ordered_json m;
    m["seed"] = cfg.seed;
    m["input_kind"] = cfg.dataset.input_kind;
    m["filter"] = {{"taps", cfg.filter.taps},
                   {"bits", cfg.filter.bits},
                   {"objective_quantized", obj_rounded},
                   {"objective_refined", info.objective},
                   {"sa_accepted", info.accepted}};
    m["videos"] = {{"train", fit_ids}, {"validation", val_ids}, {"test", test_ids}};
    m["blocks"] = {{"train", n_train_blocks}, {"validation", n_val_blocks}, {"test", n_test}};
    m["auc"] = {{"single", auc_single}, {"multi", auc_multi}};
    m["confusion"] = {{"pred_threshold", cfg.eval.pred_threshold},
                      {"gt_threshold", cfg.eval.gt_threshold},
                      {"tp", counts[0]},
                      {"fp", counts[1]},
                      {"tn", counts[2]},
                      {"fn", counts[3]}};
    write_text_file(out + "/metrics.json", m.dump(2) + "\n");

    std::printf("auc: single %.9g multi %.9g\n", auc_single, auc_multi);
    std::printf("wrote %s/metrics.json\n", out.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AM-FM demodulation block face detection"};
    app.option_defaults()->always_capture_default(true);
    app.require_subcommand(1);
    app.set_version_flag("--version", amfm_version());

    const RunConfig defaults = default_run_config();

    // design-filter
    DesignArgs design;
    design.filter = defaults.filter;
    CLI::App* cmd_design = app.add_subcommand("design-filter",
                                              "Design the fixed-point Hilbert FIR filter");
    cmd_design->add_option("--config", design.config_path, "JSON run config (filter section)");
    cmd_design->add_option("--taps", design.filter.taps, "odd tap count");
    cmd_design->add_option("--beta", design.filter.kaiser_beta, "Kaiser window beta");
    cmd_design->add_option("--transition", design.filter.transition,
                           "transition width as a fraction of pi");
    cmd_design->add_option("--n-fft", design.filter.n_fft, "design/objective grid size");
    cmd_design->add_option("--bits", design.filter.bits, "fractional bits of the coefficient grid");
    cmd_design->add_option("--iters", design.filter.sa.max_iterations, "annealing iterations");
    cmd_design->add_option("--step", design.filter.sa.step, "annealing step (0 = grid default)");
    cmd_design->add_option("--c-exponent", design.filter.sa.c_exponent,
                           "acceptance constant (0 = warm-up calibration)");
    cmd_design->add_option("--seed", design.seed, "run seed");
    cmd_design->add_flag("--float", design.float_only, "skip quantization and annealing");
    cmd_design->add_option("--out", design.out_path, "output filter file")->required();

    // filterbank
    FilterbankArgs fbank;
    fbank.bank = defaults.bank;
    CLI::App* cmd_bank = app.add_subcommand("filterbank", "Build the Gabor channel bank");
    cmd_bank->add_option("--config", fbank.config_path, "JSON run config (bank section)");
    cmd_bank->add_option("--orientations", fbank.bank.orientations, "channels per scale");
    cmd_bank->add_option("--theta-step", fbank.bank.theta_step, "radians between orientations");
    cmd_bank->add_option("--scale2-theta0", fbank.bank.scale2_theta0, "scale-2 starting angle");
    cmd_bank->add_option("--omega", fbank.bank.omega, "scale-2 center frequency (rad/sample)");
    cmd_bank->add_option("--kernel-size", fbank.bank.kernel_size, "odd kernel size");
    cmd_bank->add_option("--sigma-x", fbank.bank.sigma_x, "envelope sigma along theta");
    cmd_bank->add_option("--sigma-y", fbank.bank.sigma_y, "envelope sigma across theta");
    cmd_bank->add_option("--out", fbank.out_path, "output bank file");
    cmd_bank->add_flag("--report", fbank.report, "print the per-channel frequency report");
    cmd_bank->add_option("--report-n-fft", fbank.report_n_fft, "FFT size for the report");

    // demodulate
    DemodArgs demod;
    CLI::App* cmd_demod = app.add_subcommand("demodulate", "AM-FM demodulate one image");
    cmd_demod->add_option("--image", demod.image_path, "input PGM/PPM")->required();
    cmd_demod->add_option("--filter", demod.filter_path, "Hilbert filter file")->required();
    cmd_demod->add_option("--bank", demod.bank_path, "Gabor bank file")->required();
    cmd_demod->add_option("--out-dir", demod.out_dir, "output directory")->required();
    cmd_demod->add_option("--threads", demod.threads, "parallel channel workers");
    cmd_demod->add_flag("--decimate", demod.decimate, "2x decimate before demodulating");
    cmd_demod->add_flag("--mean", demod.mean, "average 2x2 cells when decimating");

    // dataset
    CLI::App* cmd_ds = app.add_subcommand("dataset", "Create, build, or inspect block datasets");
    cmd_ds->require_subcommand(1);

    SynthArgs synth;
    synth.videos = defaults.dataset.synth.videos;
    synth.frames = defaults.dataset.synth.frames_per_video;
    CLI::App* cmd_synth = cmd_ds->add_subcommand("synth", "Render the synthetic corpus");
    cmd_synth->add_option("--out-dir", synth.out_dir, "corpus directory")->required();
    cmd_synth->add_option("--videos", synth.videos, "video count");
    cmd_synth->add_option("--frames", synth.frames, "frames per video");
    cmd_synth->add_option("--seed", synth.seed, "run seed");
    cmd_synth->add_option("--threads", synth.threads, "parallel frame workers");

    BuildArgs build;
    build.input_kind = defaults.dataset.input_kind;
    CLI::App* cmd_build = cmd_ds->add_subcommand("build", "Build a block dataset from a corpus");
    cmd_build->add_option("--corpus", build.corpus_dir, "corpus directory")->required();
    cmd_build->add_option("--input-kind", build.input_kind, "original|fm|ia|am-fm")
        ->check(CLI::IsMember({"original", "fm", "ia", "am-fm"}));
    cmd_build->add_option("--filter", build.filter_path, "Hilbert filter file");
    cmd_build->add_option("--bank", build.bank_path, "Gabor bank file");
    cmd_build->add_option("--out", build.out_path, "output dataset file")->required();
    cmd_build->add_flag("--mean", build.mean, "average 2x2 cells when decimating");
    cmd_build->add_option("--threads", build.threads, "parallel frame workers");

    std::string inspect_path;
    CLI::App* cmd_inspect = cmd_ds->add_subcommand("inspect", "Print dataset header and stats");
    cmd_inspect->add_option("path", inspect_path, "dataset file")->required();

    // train
    TrainArgs train;
    train.train = defaults.train_single;
    CLI::App* cmd_train = app.add_subcommand("train", "Train a regression net on a dataset");
    cmd_train->add_option("--config", train.config_path, "JSON run config (train section)");
    cmd_train->add_option("--dataset", train.dataset_path, "training dataset file")->required();
    cmd_train->add_option("--val", train.val_path, "validation dataset file");
    cmd_train->add_option("--mode", train.mode, "single|multi")
        ->check(CLI::IsMember({"single", "multi"}));
    cmd_train->add_option("--single-net", train.single_net_path,
                          "trained single-block net (multi mode)");
    cmd_train->add_option("--out", train.out_path, "output net file")->required();
    cmd_train->add_option("--history", train.history_path, "write per-epoch CSV here");
    cmd_train->add_option("--loss-svg", train.loss_svg_path, "write the loss plot here");
    CLI::Option* t_epochs = cmd_train->add_option("--epochs", train.train.epochs, "epochs");
    CLI::Option* t_batch = cmd_train->add_option("--batch-size", train.train.batch_size, "batch size");
    CLI::Option* t_lr = cmd_train->add_option("--lr", train.train.learning_rate, "learning rate");
    CLI::Option* t_opt = cmd_train->add_option("--optimizer", train.train.optimizer, "adam|sgd")
                             ->check(CLI::IsMember({"adam", "sgd"}));
    bool no_shuffle = false;
    cmd_train->add_flag("--no-shuffle", no_shuffle, "keep the sample order fixed");
    CLI::Option* t_threads = cmd_train->add_option("--threads", train.train.threads,
                                                   "batch-chunk workers");
    cmd_train->add_option("--seed", train.seed, "run seed");

    // evaluate
    EvaluateArgs evaluate;
    evaluate.eval = defaults.eval;
    CLI::App* cmd_eval = app.add_subcommand("evaluate", "Score a dataset and write ROC reports");
    cmd_eval->add_option("--dataset", evaluate.dataset_path, "dataset file")->required();
    cmd_eval->add_option("--net", evaluate.net_path, "single-block net file")->required();
    cmd_eval->add_option("--multi", evaluate.multi_path, "multi-block net file");
    cmd_eval->add_option("--out-dir", evaluate.out_dir, "report directory")->required();
    cmd_eval->add_option("--pred-threshold", evaluate.eval.pred_threshold,
                         "score threshold for confusion counts");
    cmd_eval->add_option("--gt-threshold", evaluate.eval.gt_threshold,
                         "overlap fraction above which a block is positive");
    cmd_eval->add_option("--threads", evaluate.threads, "prediction workers");

    // pipeline
    std::string pipe_config;
    std::uint64_t pipe_seed = 0;
    std::string pipe_out;
    int pipe_threads = 1;
    CLI::App* cmd_pipe = app.add_subcommand("pipeline",
                                            "Corpus -> dataset -> train -> evaluate, end to end");
    cmd_pipe->add_option("--config", pipe_config, "JSON run config");
    CLI::Option* p_seed = cmd_pipe->add_option("--seed", pipe_seed, "run seed");
    CLI::Option* p_out = cmd_pipe->add_option("--out-dir", pipe_out, "artifact directory");
    CLI::Option* p_threads = cmd_pipe->add_option("--threads", pipe_threads,
                                                  "corpus/dataset workers");

    cmd_design->callback([&] {
        DesignArgs a = design;
        if (!a.config_path.empty()) {
            RunConfig rc = default_run_config();
            apply_config(rc, load_json_file(a.config_path));
            FilterCfg merged = rc.filter;
            DesignArgs flags = design; // flag values win over the config
            if (cmd_design->count("--taps")) merged.taps = flags.filter.taps;
            if (cmd_design->count("--beta")) merged.kaiser_beta = flags.filter.kaiser_beta;
            if (cmd_design->count("--transition")) merged.transition = flags.filter.transition;
            if (cmd_design->count("--n-fft")) merged.n_fft = flags.filter.n_fft;
            if (cmd_design->count("--bits")) merged.bits = flags.filter.bits;
            if (cmd_design->count("--iters")) merged.sa.max_iterations = flags.filter.sa.max_iterations;
            if (cmd_design->count("--step")) merged.sa.step = flags.filter.sa.step;
            if (cmd_design->count("--c-exponent")) merged.sa.c_exponent = flags.filter.sa.c_exponent;
            a.filter = merged;
            if (!cmd_design->count("--seed")) a.seed = rc.seed;
        }
        run_design_filter(a);
    });

    cmd_bank->callback([&] {
        FilterbankArgs a = fbank;
        if (!a.config_path.empty()) {
            RunConfig rc = default_run_config();
            apply_config(rc, load_json_file(a.config_path));
            AmfmBankConfig merged = rc.bank;
            if (cmd_bank->count("--orientations")) merged.orientations = fbank.bank.orientations;
            if (cmd_bank->count("--theta-step")) merged.theta_step = fbank.bank.theta_step;
            if (cmd_bank->count("--scale2-theta0")) merged.scale2_theta0 = fbank.bank.scale2_theta0;
            if (cmd_bank->count("--omega")) merged.omega = fbank.bank.omega;
            if (cmd_bank->count("--kernel-size")) merged.kernel_size = fbank.bank.kernel_size;
            if (cmd_bank->count("--sigma-x")) merged.sigma_x = fbank.bank.sigma_x;
            if (cmd_bank->count("--sigma-y")) merged.sigma_y = fbank.bank.sigma_y;
            a.bank = merged;
        }
        if (a.out_path.empty() && !a.report)
            throw CliError{1, "filterbank needs --out or --report"};
        run_filterbank(a);
    });

    cmd_demod->callback([&] { run_demodulate(demod); });
    cmd_synth->callback([&] { run_dataset_synth(synth); });
    cmd_build->callback([&] { run_dataset_build(build); });
    cmd_inspect->callback([&] { run_dataset_inspect(inspect_path); });

    cmd_train->callback([&] {
        TrainArgs a = train;
        a.train.shuffle = !no_shuffle;
        if (!a.config_path.empty()) {
            RunConfig rc = default_run_config();
            apply_config(rc, load_json_file(a.config_path));
            TrainCfg merged = a.mode == "multi" ? rc.train_multi : rc.train_single;
            if (t_epochs->count()) merged.epochs = train.train.epochs;
            if (t_batch->count()) merged.batch_size = train.train.batch_size;
            if (t_lr->count()) merged.learning_rate = train.train.learning_rate;
            if (t_opt->count()) merged.optimizer = train.train.optimizer;
            if (t_threads->count()) merged.threads = train.train.threads;
            if (no_shuffle) merged.shuffle = false;
            a.train = merged;
            if (!cmd_train->count("--seed")) a.seed = rc.seed;
        }
        run_train(a);
    });

    cmd_eval->callback([&] { run_evaluate(evaluate); });

    cmd_pipe->callback([&] {
        RunConfig cfg = default_run_config();
        if (!pipe_config.empty()) apply_config(cfg, load_json_file(pipe_config));
        if (p_seed->count()) cfg.seed = pipe_seed;
        if (p_out->count()) cfg.out_dir = pipe_out;
        if (p_threads->count()) cfg.threads = pipe_threads;
        run_pipeline(cfg);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    }
    return 0;
}
