#include "amfm/amfm.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core/anneal.hpp"
#include "core/dataset.hpp"
#include "core/demod.hpp"
#include "core/errors.hpp"
#include "core/eval.hpp"
#include "core/fir.hpp"
#include "core/gabor.hpp"
#include "core/grid.hpp"
#include "core/image.hpp"
#include "core/net.hpp"
#include "core/report.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

struct AmfmFilter { amfm::FirFilter v; };
struct AmfmBank { amfm::KernelBank v; };
struct AmfmImage { amfm::Grid v; };
struct AmfmDecomp { amfm::AmFmDecomposition v; };
struct AmfmDataset { amfm::BlockDataset v; };
struct AmfmNet { amfm::Net v; };
struct AmfmHistory { amfm::History v; };
struct AmfmRoc { amfm::RocCurve v; };

namespace {

thread_local std::string g_error;
thread_local std::string g_warning;

int fail(const char* msg) {
    g_error = msg;
    return AMFM_ERR_PARAM;
}

// Runs the body with fresh error/warning slots and maps thrown error
// families onto status codes.
template <typename Fn>
int guarded(Fn&& fn) {
    g_error.clear();
    g_warning.clear();
    try {
        fn();
        return AMFM_OK;
    } catch (const amfm::ParamError& e) {
        g_error = e.what();
        return AMFM_ERR_PARAM;
    } catch (const amfm::DataError& e) {
        g_error = e.what();
        return AMFM_ERR_DATA;
    } catch (const amfm::IoError& e) {
        g_error = e.what();
        return AMFM_ERR_IO;
    } catch (const amfm::NumericError& e) {
        g_error = e.what();
        return AMFM_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_error = e.what();
        return AMFM_ERR_PARAM;
    }
}

void copy_string(const std::string& s, char* buf, size_t cap) {
    if (!buf || cap < s.size() + 1) throw amfm::ParamError("string buffer too small");
    std::memcpy(buf, s.c_str(), s.size() + 1);
}

template <typename T>
void copy_values(const std::vector<T>& src, T* out, size_t cap) {
    if (!out || cap < src.size()) throw amfm::ParamError("output buffer too small");
    std::copy(src.begin(), src.end(), out);
}

// Distinct (video, frame) pairs of a dataset in canonical order.
std::vector<std::pair<std::string, int>> dataset_frames(const amfm::BlockDataset& ds) {
    std::set<std::pair<std::string, int>> seen;
    for (const amfm::BlockProvenance& p : ds.provenance) seen.insert({p.video_id, p.frame_index});
    return {seen.begin(), seen.end()};
}

std::vector<int> marks_for(const double* scores, const double* targets,
                           double pred_threshold, double gt_threshold) {
    if (!scores || !targets) throw amfm::ParamError("null argument");
    const std::vector<double> s(scores, scores + amfm::kBlocksPerFrame);
    const std::vector<double> t(targets, targets + amfm::kBlocksPerFrame);
    const std::vector<amfm::Mark> marks = amfm::block_marks(s, t, pred_threshold, gt_threshold);
    std::vector<int> out(marks.size());
    for (size_t i = 0; i < marks.size(); ++i) out[i] = static_cast<int>(marks[i]);
    return out;
}

amfm::TrainConfig to_train_config(const AmfmTrainConfig* config) {
    if (!config) throw amfm::ParamError("null train config");
    amfm::TrainConfig c;
    c.epochs = config->epochs;
    c.batch_size = config->batch_size;
    c.learning_rate = config->learning_rate;
    c.optimizer = config->optimizer ? config->optimizer : "adam";
    c.beta1 = config->beta1;
    c.beta2 = config->beta2;
    c.epsilon = config->epsilon;
    c.rng_seed = config->rng_seed;
    c.shuffle = config->shuffle != 0;
    c.threads = config->threads;
    return c;
}

} // namespace

extern "C" {

const char* amfm_last_error(void) { return g_error.c_str(); }
const char* amfm_last_warning(void) { return g_warning.c_str(); }
const char* amfm_version(void) { return "1.0.0"; }

uint64_t amfm_mix_seed(uint64_t seed, const char* stage) {
    return amfm::mix_seed(seed, stage ? stage : "");
}

/* ---- Hilbert FIR design ---- */

int amfm_design_hilbert(int taps, double kaiser_beta, int n_fft, double transition,
                        AmfmFilter** out) {
    if (!out) return fail("null output pointer");
    *out = nullptr;
    return guarded([&] {
        *out = new AmfmFilter{amfm::design_hilbert_fir(taps, kaiser_beta, n_fft, transition)};
    });
}

int amfm_quantize(const AmfmFilter* filter, int bits, AmfmFilter** out) {
    if (!filter || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmFilter{amfm::quantize(filter->v, bits)}; });
}

void amfm_sa_config_default(AmfmSaConfig* config) {
    if (!config) return;
    const amfm::SaConfig d;
    config->max_iterations = d.max_iterations;
    config->step = d.step;
    config->c_exponent = d.c_exponent;
    config->rng_seed = d.rng_seed;
}

int amfm_sa_refine(const AmfmFilter* filter, int n_fft, double transition,
                   const AmfmSaConfig* config, AmfmFilter** out, AmfmSaInfo* info) {
    if (!filter || !config || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        amfm::SaConfig c;
        c.max_iterations = config->max_iterations;
        c.step = config->step;
        c.c_exponent = config->c_exponent;
        c.rng_seed = config->rng_seed;
        const amfm::IdealResponse ideal = amfm::ideal_hilbert_magnitude(n_fft, transition);
        amfm::SaResult r = amfm::sa_refine(filter->v, ideal, c);
        if (info) {
            info->objective = r.objective;
            info->c_used = r.c_used;
            info->step_used = r.step_used;
            info->accepted = r.accepted;
        }
        *out = new AmfmFilter{std::move(r.filter)};
    });
}

int amfm_objective(const AmfmFilter* filter, int n_fft, double transition, double* out) {
    if (!filter || !out) return fail("null argument");
    return guarded([&] {
        const amfm::IdealResponse ideal = amfm::ideal_hilbert_magnitude(n_fft, transition);
        *out = amfm::objective_mse(filter->v.taps, ideal);
    });
}

int amfm_filter_length(const AmfmFilter* filter, int* out) {
    if (!filter || !out) return fail("null argument");
    return guarded([&] { *out = filter->v.length(); });
}

int amfm_filter_bits(const AmfmFilter* filter, int* out) {
    if (!filter || !out) return fail("null argument");
    return guarded([&] { *out = filter->v.format ? filter->v.format->bits : 0; });
}

int amfm_filter_taps(const AmfmFilter* filter, double* out, size_t cap) {
    if (!filter) return fail("null argument");
    return guarded([&] { copy_values(filter->v.taps, out, cap); });
}

int amfm_apply_fir(const AmfmFilter* filter, const double* x, size_t n, double* y) {
    if (!filter || !x || !y) return fail("null argument");
    return guarded([&] {
        const std::vector<double> signal(x, x + n);
        const std::vector<double> filtered = amfm::apply_fir(signal, filter->v);
        std::copy(filtered.begin(), filtered.end(), y);
    });
}

int amfm_linear_phase_report(const AmfmFilter* filter, int u, int n,
                             double* max_residual, double* fitted_delay) {
    if (!filter) return fail("null argument");
    return guarded([&] {
        const amfm::PhaseReport r = amfm::linear_phase_report(filter->v, u, n);
        if (max_residual) *max_residual = r.max_residual;
        if (fitted_delay) *fitted_delay = r.fitted_delay;
    });
}

int amfm_filter_save(const AmfmFilter* filter, const char* path) {
    if (!filter || !path) return fail("null argument");
    return guarded([&] { amfm::save_filter(filter->v, path); });
}

int amfm_filter_load(const char* path, AmfmFilter** out) {
    if (!path || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmFilter{amfm::load_filter(path)}; });
}

void amfm_filter_free(AmfmFilter* filter) { delete filter; }

/* ---- Gabor filterbank ---- */

void amfm_bank_config_default(AmfmBankConfig* config) {
    if (!config) return;
    const amfm::BankConfig d;
    config->orientations = d.orientations;
    config->theta_step = d.theta_step;
    config->scale2_theta0 = d.scale2_theta0;
    config->omega = d.omega;
    config->kernel_size = d.kernel_size;
    config->sigma_x = d.sigma_x;
    config->sigma_y = d.sigma_y;
}

int amfm_bank_build(const AmfmBankConfig* config, AmfmBank** out) {
    if (!config || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        amfm::BankConfig c;
        c.orientations = config->orientations;
        c.theta_step = config->theta_step;
        c.scale2_theta0 = config->scale2_theta0;
        c.omega = config->omega;
        c.kernel_size = config->kernel_size;
        c.sigma_x = config->sigma_x;
        c.sigma_y = config->sigma_y;
        *out = new AmfmBank{amfm::build_bank(c)};
    });
}

int amfm_bank_channels(const AmfmBank* bank, int* out) {
    if (!bank || !out) return fail("null argument");
    return guarded([&] { *out = static_cast<int>(bank->v.size()); });
}

int amfm_bank_kernel_size(const AmfmBank* bank, int* out) {
    if (!bank || !out) return fail("null argument");
    return guarded([&] {
        if (bank->v.empty()) throw amfm::ParamError("empty bank");
        *out = bank->v.front().values.h;
    });
}

int amfm_bank_channel_params(const AmfmBank* bank, int channel, double* theta,
                             double* sigma_x, double* sigma_y, double* omega, int* scale) {
    if (!bank) return fail("null argument");
    return guarded([&] {
        if (channel < 0 || static_cast<size_t>(channel) >= bank->v.size())
            throw amfm::ParamError("channel index out of range");
        const amfm::GaborKernel& k = bank->v[static_cast<size_t>(channel)];
        if (theta) *theta = k.theta;
        if (sigma_x) *sigma_x = k.sigma_x;
        if (sigma_y) *sigma_y = k.sigma_y;
        if (omega) *omega = k.omega;
        if (scale) *scale = k.scale;
    });
}

int amfm_bank_report(const AmfmBank* bank, int n_fft, AmfmChannelReport* out, size_t cap) {
    if (!bank || !out) return fail("null argument");
    return guarded([&] {
        const std::vector<amfm::ChannelReport> reports = amfm::bank_frequency_report(bank->v, n_fft);
        if (cap < reports.size()) throw amfm::ParamError("output buffer too small");
        for (size_t i = 0; i < reports.size(); ++i) {
            out[i].peak_fy = reports[i].peak_fy;
            out[i].peak_fx = reports[i].peak_fx;
            out[i].peak_magnitude = reports[i].peak_magnitude;
            out[i].dc_gain = reports[i].dc_gain;
        }
    });
}

int amfm_bank_save(const AmfmBank* bank, const char* path) {
    if (!bank || !path) return fail("null argument");
    return guarded([&] { amfm::save_bank(bank->v, path); });
}

int amfm_bank_load(const char* path, AmfmBank** out) {
    if (!path || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmBank{amfm::load_bank(path)}; });
}

void amfm_bank_free(AmfmBank* bank) { delete bank; }

/* ---- Images ---- */

int amfm_image_load(const char* path, AmfmImage** out) {
    if (!path || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmImage{amfm::load_image(path)}; });
}

int amfm_image_create(int h, int w, const double* data, AmfmImage** out) {
    if (!out) return fail("null output pointer");
    *out = nullptr;
    return guarded([&] {
        if (h < 1 || w < 1) throw amfm::ParamError("image size must be positive");
        amfm::Grid g(h, w);
        if (data) std::copy(data, data + g.data.size(), g.data.begin());
        *out = new AmfmImage{std::move(g)};
    });
}

int amfm_image_size(const AmfmImage* img, int* h, int* w) {
    if (!img) return fail("null argument");
    return guarded([&] {
        if (h) *h = img->v.h;
        if (w) *w = img->v.w;
    });
}

int amfm_image_data(const AmfmImage* img, double* out, size_t cap) {
    if (!img) return fail("null argument");
    return guarded([&] { copy_values(img->v.data, out, cap); });
}

int amfm_image_rescaled(const AmfmImage* img, AmfmImage** out) {
    if (!img || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmImage{amfm::rescale_for_export(img->v)}; });
}

int amfm_image_decimate(const AmfmImage* img, int mean_mode, AmfmImage** out) {
    if (!img || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmImage{amfm::decimate_frame(img->v, mean_mode != 0)}; });
}

int amfm_image_pad(const AmfmImage* img, AmfmImage** out) {
    if (!img || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmImage{amfm::pad_to_grid(img->v)}; });
}

int amfm_image_save_pgm(const AmfmImage* img, const char* path) {
    if (!img || !path) return fail("null argument");
    return guarded([&] { amfm::save_pgm(img->v, path); });
}

void amfm_image_free(AmfmImage* img) { delete img; }

/* ---- AM-FM demodulation ---- */

int amfm_analytic_im(const AmfmImage* img, const AmfmFilter* filter, AmfmImage** out) {
    if (!img || !filter || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        amfm::AnalyticImage a = amfm::analytic_image(img->v, filter->v);
        *out = new AmfmImage{std::move(a.im)};
    });
}

int amfm_demodulate(const AmfmImage* img, const AmfmFilter* filter, const AmfmBank* bank,
                    int threads, AmfmDecomp** out) {
    if (!img || !filter || !bank || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new AmfmDecomp{amfm::demodulate(img->v, filter->v, bank->v, threads)};
    });
}

int amfm_decomp_size(const AmfmDecomp* decomp, int* h, int* w) {
    if (!decomp) return fail("null argument");
    return guarded([&] {
        if (h) *h = decomp->v.ia.h;
        if (w) *w = decomp->v.ia.w;
    });
}

int amfm_decomp_plane(const AmfmDecomp* decomp, int plane, AmfmImage** out) {
    if (!decomp || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        const amfm::AmFmDecomposition& d = decomp->v;
        amfm::Grid g;
        switch (plane) {
            case AMFM_PLANE_IA: g = d.ia; break;
            case AMFM_PLANE_IP: g = d.ip; break;
            case AMFM_PLANE_FM: g = d.fm; break;
            case AMFM_PLANE_CHANNEL: {
                g = amfm::Grid(d.channel.h, d.channel.w);
                for (size_t i = 0; i < g.data.size(); ++i)
                    g.data[i] = static_cast<double>(d.channel.data[i]);
                break;
            }
            case AMFM_PLANE_IF_X:
            case AMFM_PLANE_IF_Y: {
                amfm::IfField f = amfm::instantaneous_frequency(d.ip);
                g = plane == AMFM_PLANE_IF_X ? std::move(f.dpsi_dx) : std::move(f.dpsi_dy);
                break;
            }
            default: throw amfm::ParamError("unknown plane");
        }
        *out = new AmfmImage{std::move(g)};
    });
}

void amfm_decomp_free(AmfmDecomp* decomp) { delete decomp; }

/* ---- Synthetic corpus & datasets ---- */

int amfm_synth_corpus(uint64_t seed, int n_videos, int frames_per_video,
                      const char* out_dir, int threads) {
    if (!out_dir) return fail("null argument");
    return guarded([&] { amfm::write_synth_corpus(seed, n_videos, frames_per_video, out_dir, threads); });
}

int amfm_dataset_build(const char* corpus_dir, const char* input_kind,
                       const AmfmFilter* filter, const AmfmBank* bank,
                       int mean_decimation, int threads, AmfmDataset** out) {
    if (!corpus_dir || !input_kind || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        const amfm::InputKind kind = amfm::input_kind_from_string(input_kind);
        if (kind != amfm::InputKind::original && (!filter || !bank))
            throw amfm::ParamError("this input kind needs a filter and a bank");
        const std::vector<amfm::FrameInput> frames = amfm::enumerate_corpus(corpus_dir);
        std::string warning;
        const std::vector<amfm::FaceRect> rects = amfm::corpus_annotations(corpus_dir, &warning);
        static const amfm::FirFilter no_filter;
        static const amfm::KernelBank no_bank;
        amfm::BlockDataset ds = amfm::build_dataset(frames, rects, kind,
                                                    filter ? filter->v : no_filter,
                                                    bank ? bank->v : no_bank,
                                                    mean_decimation != 0, threads);
        g_warning = warning;
        *out = new AmfmDataset{std::move(ds)};
    });
}

int amfm_dataset_save(const AmfmDataset* ds, const char* path) {
    if (!ds || !path) return fail("null argument");
    return guarded([&] { amfm::save_dataset(ds->v, path); });
}

int amfm_dataset_load(const char* path, AmfmDataset** out) {
    if (!path || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmDataset{amfm::load_dataset(path)}; });
}

int amfm_dataset_count(const AmfmDataset* ds, size_t* out) {
    if (!ds || !out) return fail("null argument");
    return guarded([&] { *out = ds->v.count(); });
}

int amfm_dataset_dims(const AmfmDataset* ds, int* h, int* w, int* channels) {
    if (!ds) return fail("null argument");
    return guarded([&] {
        if (h) *h = ds->v.h;
        if (w) *w = ds->v.w;
        if (channels) *channels = ds->v.channels;
    });
}

int amfm_dataset_input_kind(const AmfmDataset* ds, char* buf, size_t cap) {
    if (!ds) return fail("null argument");
    return guarded([&] { copy_string(amfm::to_string(ds->v.input_kind), buf, cap); });
}

int amfm_dataset_block(const AmfmDataset* ds, size_t index, float* out, size_t cap) {
    if (!ds) return fail("null argument");
    return guarded([&] {
        if (index >= ds->v.count()) throw amfm::ParamError("block index out of range");
        copy_values(ds->v.blocks[index], out, cap);
    });
}

int amfm_dataset_target(const AmfmDataset* ds, size_t index, float* out) {
    if (!ds || !out) return fail("null argument");
    return guarded([&] {
        if (index >= ds->v.count()) throw amfm::ParamError("block index out of range");
        *out = ds->v.targets[index];
    });
}

int amfm_dataset_provenance(const AmfmDataset* ds, size_t index, char* video_buf,
                            size_t video_cap, int* frame_index, int* block_row,
                            int* block_col) {
    if (!ds) return fail("null argument");
    return guarded([&] {
        if (index >= ds->v.count()) throw amfm::ParamError("block index out of range");
        const amfm::BlockProvenance& p = ds->v.provenance[index];
        if (video_buf) copy_string(p.video_id, video_buf, video_cap);
        if (frame_index) *frame_index = p.frame_index;
        if (block_row) *block_row = p.block_row;
        if (block_col) *block_col = p.block_col;
    });
}

int amfm_dataset_video_count(const AmfmDataset* ds, size_t* out) {
    if (!ds || !out) return fail("null argument");
    return guarded([&] { *out = amfm::dataset_video_ids(ds->v).size(); });
}

int amfm_dataset_video_id(const AmfmDataset* ds, size_t index, char* buf, size_t cap) {
    if (!ds) return fail("null argument");
    return guarded([&] {
        const std::vector<std::string> ids = amfm::dataset_video_ids(ds->v);
        if (index >= ids.size()) throw amfm::ParamError("video index out of range");
        copy_string(ids[index], buf, cap);
    });
}

int amfm_dataset_select(const AmfmDataset* ds, const char* const* video_ids, size_t n_ids,
                        AmfmDataset** out) {
    if (!ds || !out || (n_ids > 0 && !video_ids)) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        std::set<std::string> ids;
        for (size_t i = 0; i < n_ids; ++i) {
            if (!video_ids[i]) throw amfm::ParamError("null video id");
            ids.insert(video_ids[i]);
        }
        *out = new AmfmDataset{amfm::select_videos(ds->v, ids)};
    });
}

int amfm_dataset_frame_count(const AmfmDataset* ds, size_t* out) {
    if (!ds || !out) return fail("null argument");
    return guarded([&] { *out = dataset_frames(ds->v).size(); });
}

int amfm_dataset_frame_info(const AmfmDataset* ds, size_t index, char* video_buf,
                            size_t video_cap, int* frame_index) {
    if (!ds) return fail("null argument");
    return guarded([&] {
        const auto frames = dataset_frames(ds->v);
        if (index >= frames.size()) throw amfm::ParamError("frame index out of range");
        if (video_buf) copy_string(frames[index].first, video_buf, video_cap);
        if (frame_index) *frame_index = frames[index].second;
    });
}

int amfm_dataset_frame_plane(const AmfmDataset* ds, const char* video_id, int frame_index,
                             int channel, AmfmImage** out) {
    if (!ds || !video_id || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        const amfm::BlockDataset& d = ds->v;
        if (channel < 0 || channel >= d.channels)
            throw amfm::ParamError("channel index out of range");
        amfm::Grid plane(amfm::kGridHeight, amfm::kGridWidth);
        std::vector<bool> seen(static_cast<size_t>(amfm::kBlocksPerFrame), false);
        for (size_t i = 0; i < d.count(); ++i) {
            const amfm::BlockProvenance& p = d.provenance[i];
            if (p.video_id != video_id || p.frame_index != frame_index) continue;
            seen[static_cast<size_t>(p.block_row * amfm::kGridCols + p.block_col)] = true;
            const std::vector<float>& block = d.blocks[i];
            for (int r = 0; r < d.h; ++r)
                for (int c = 0; c < d.w; ++c)
                    plane.at(p.block_row * amfm::kBlockSize + r,
                             p.block_col * amfm::kBlockSize + c) =
                        block[static_cast<size_t>((r * d.w + c) * d.channels + channel)];
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            throw amfm::DataError("frame not present or incomplete");
        *out = new AmfmImage{std::move(plane)};
    });
}

int amfm_dataset_frame_targets(const AmfmDataset* ds, const char* video_id, int frame_index,
                               double* out, size_t cap) {
    if (!ds || !video_id || !out) return fail("null argument");
    return guarded([&] {
        if (cap < static_cast<size_t>(amfm::kBlocksPerFrame))
            throw amfm::ParamError("output buffer too small");
        const amfm::BlockDataset& d = ds->v;
        std::vector<bool> seen(static_cast<size_t>(amfm::kBlocksPerFrame), false);
        for (size_t i = 0; i < d.count(); ++i) {
            const amfm::BlockProvenance& p = d.provenance[i];
            if (p.video_id != video_id || p.frame_index != frame_index) continue;
            const size_t cell = static_cast<size_t>(p.block_row * amfm::kGridCols + p.block_col);
            seen[cell] = true;
            out[cell] = static_cast<double>(d.targets[i]);
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            throw amfm::DataError("frame not present or incomplete");
    });
}

void amfm_dataset_free(AmfmDataset* ds) { delete ds; }

int amfm_split_plan(const char* const* train_ids, size_t n_train, const char* const* test_ids,
                    size_t n_test, double validation_fraction, int* val_flags) {
    if ((n_train > 0 && !train_ids) || (n_test > 0 && !test_ids) || (n_train > 0 && !val_flags))
        return fail("null argument");
    return guarded([&] {
        amfm::SplitSpec spec;
        for (size_t i = 0; i < n_train; ++i) {
            if (!train_ids[i]) throw amfm::ParamError("null video id");
            spec.train_videos.push_back(train_ids[i]);
        }
        for (size_t i = 0; i < n_test; ++i) {
            if (!test_ids[i]) throw amfm::ParamError("null video id");
            spec.test_videos.push_back(test_ids[i]);
        }
        spec.validation_fraction = validation_fraction;
        amfm::validate_split(spec);
        const std::vector<std::string> val = amfm::validation_videos(spec);
        const std::set<std::string> val_set(val.begin(), val.end());
        for (size_t i = 0; i < n_train; ++i)
            val_flags[i] = val_set.count(train_ids[i]) ? 1 : 0;
    });
}

/* ---- Regression nets ---- */

int amfm_net_single(int channels, AmfmNet** out) {
    if (!out) return fail("null output pointer");
    *out = nullptr;
    return guarded([&] { *out = new AmfmNet{amfm::Net(amfm::build_single_block_net(channels))}; });
}

int amfm_net_multi(AmfmNet** out) {
    if (!out) return fail("null output pointer");
    *out = nullptr;
    return guarded([&] { *out = new AmfmNet{amfm::Net(amfm::build_multi_block_net())}; });
}

int amfm_net_lenet5(AmfmNet** out) {
    if (!out) return fail("null output pointer");
    *out = nullptr;
    return guarded([&] { *out = new AmfmNet{amfm::Net(amfm::build_lenet5_baseline())}; });
}

int amfm_net_init(AmfmNet* net, uint64_t seed) {
    if (!net) return fail("null argument");
    return guarded([&] { net->v.init_params(seed); });
}

int amfm_net_param_count(const AmfmNet* net, size_t* out) {
    if (!net || !out) return fail("null argument");
    return guarded([&] { *out = net->v.param_count(); });
}

int amfm_net_input_size(const AmfmNet* net, int* out) {
    if (!net || !out) return fail("null argument");
    return guarded([&] { *out = net->v.input_size(); });
}

int amfm_net_output_size(const AmfmNet* net, int* out) {
    if (!net || !out) return fail("null argument");
    return guarded([&] { *out = net->v.output_size(); });
}

int amfm_net_get_params(const AmfmNet* net, double* out, size_t cap) {
    if (!net) return fail("null argument");
    return guarded([&] { copy_values(net->v.params(), out, cap); });
}

int amfm_net_set_params(AmfmNet* net, const double* params, size_t n) {
    if (!net || !params) return fail("null argument");
    return guarded([&] {
        if (n != net->v.param_count()) throw amfm::ParamError("parameter count mismatch");
        std::copy(params, params + n, net->v.params().begin());
    });
}

int amfm_net_forward(const AmfmNet* net, const double* input, size_t n, double* out,
                     size_t cap) {
    if (!net || !input || !out) return fail("null argument");
    return guarded([&] {
        if (n != static_cast<size_t>(net->v.input_size()))
            throw amfm::ParamError("input size mismatch");
        const std::vector<double> x(input, input + n);
        copy_values(net->v.forward(x), out, cap);
    });
}

int amfm_net_save(const AmfmNet* net, const char* path) {
    if (!net || !path) return fail("null argument");
    return guarded([&] { amfm::save_net(net->v, path); });
}

int amfm_net_load(const char* path, AmfmNet** out) {
    if (!path || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] { *out = new AmfmNet{amfm::load_net(path)}; });
}

void amfm_net_free(AmfmNet* net) { delete net; }

void amfm_train_config_default(AmfmTrainConfig* config) {
    if (!config) return;
    const amfm::TrainConfig d;
    config->epochs = d.epochs;
    config->batch_size = d.batch_size;
    config->learning_rate = d.learning_rate;
    config->optimizer = "adam";
    config->beta1 = d.beta1;
    config->beta2 = d.beta2;
    config->epsilon = d.epsilon;
    config->rng_seed = d.rng_seed;
    config->shuffle = d.shuffle ? 1 : 0;
    config->threads = d.threads;
}

int amfm_train_single(AmfmNet* net, const AmfmDataset* train, const AmfmDataset* val,
                      const AmfmTrainConfig* config, AmfmHistory** out) {
    if (!net || !train || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        const amfm::TrainConfig c = to_train_config(config);
        const amfm::SampleSet train_set = amfm::single_block_samples(train->v);
        const amfm::SampleSet val_set = val ? amfm::single_block_samples(val->v) : amfm::SampleSet{};
        *out = new AmfmHistory{amfm::train(net->v, train_set, val_set, c)};
    });
}

int amfm_train_multi(AmfmNet* net, const AmfmNet* net_single, const AmfmDataset* train,
                     const AmfmDataset* val, const AmfmTrainConfig* config,
                     AmfmHistory** out) {
    if (!net || !net_single || !train || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        const amfm::TrainConfig c = to_train_config(config);
        const amfm::SampleSet train_set = amfm::multi_block_samples(net_single->v, train->v, c.threads);
        const amfm::SampleSet val_set =
            val ? amfm::multi_block_samples(net_single->v, val->v, c.threads) : amfm::SampleSet{};
        *out = new AmfmHistory{amfm::train(net->v, train_set, val_set, c)};
    });
}

int amfm_predict(const AmfmNet* net, const AmfmDataset* ds, int threads, double* out,
                 size_t cap) {
    if (!net || !ds) return fail("null argument");
    return guarded([&] { copy_values(amfm::predict(net->v, ds->v, threads), out, cap); });
}

int amfm_refine(const AmfmNet* net_single, const AmfmNet* net_multi, const AmfmDataset* ds,
                int threads, double* out, size_t cap) {
    if (!net_single || !net_multi || !ds) return fail("null argument");
    return guarded([&] {
        copy_values(amfm::refine_scores(net_single->v, net_multi->v, ds->v, threads), out, cap);
    });
}

int amfm_history_epochs(const AmfmHistory* history, size_t* out) {
    if (!history || !out) return fail("null argument");
    return guarded([&] { *out = history->v.train_loss.size(); });
}

int amfm_history_row(const AmfmHistory* history, size_t epoch, double row[4]) {
    if (!history || !row) return fail("null argument");
    return guarded([&] {
        if (epoch >= history->v.train_loss.size())
            throw amfm::ParamError("epoch index out of range");
        row[0] = history->v.train_loss[epoch];
        row[1] = history->v.val_loss[epoch];
        row[2] = history->v.train_auc[epoch];
        row[3] = history->v.val_auc[epoch];
    });
}

int amfm_history_save_csv(const AmfmHistory* history, const char* path) {
    if (!history || !path) return fail("null argument");
    return guarded([&] { amfm::write_history_csv(history->v, path); });
}

int amfm_history_save_svg(const AmfmHistory* history, const char* path) {
    if (!history || !path) return fail("null argument");
    return guarded([&] { amfm::write_loss_svg(history->v, path); });
}

void amfm_history_free(AmfmHistory* history) { delete history; }

/* ---- Evaluation ---- */

int amfm_roc_build(const double* scores, const double* targets, size_t n,
                   double gt_threshold, AmfmRoc** out) {
    if (!scores || !targets || !out) return fail("null argument");
    *out = nullptr;
    return guarded([&] {
        const std::vector<double> s(scores, scores + n);
        const std::vector<double> t(targets, targets + n);
        const std::vector<int> labels = amfm::binarize_gt(t, gt_threshold);
        *out = new AmfmRoc{amfm::roc_curve(s, labels)};
    });
}

int amfm_roc_auc(const AmfmRoc* roc, double* out) {
    if (!roc || !out) return fail("null argument");
    return guarded([&] { *out = amfm::auc(roc->v); });
}

int amfm_roc_point_count(const AmfmRoc* roc, size_t* out) {
    if (!roc || !out) return fail("null argument");
    return guarded([&] { *out = roc->v.points.size(); });
}

int amfm_roc_point(const AmfmRoc* roc, size_t index, double* fpr, double* tpr,
                   double* threshold) {
    if (!roc) return fail("null argument");
    return guarded([&] {
        if (index >= roc->v.points.size()) throw amfm::ParamError("point index out of range");
        const amfm::RocPoint& p = roc->v.points[index];
        if (fpr) *fpr = p.fpr;
        if (tpr) *tpr = p.tpr;
        if (threshold) *threshold = p.threshold;
    });
}

int amfm_roc_save_csv(const AmfmRoc* roc, const char* path) {
    if (!roc || !path) return fail("null argument");
    return guarded([&] { amfm::write_roc_csv(roc->v, path); });
}

int amfm_roc_save_svg(const AmfmRoc* roc, const char* path) {
    if (!roc || !path) return fail("null argument");
    return guarded([&] { amfm::write_roc_svg(roc->v, path); });
}

void amfm_roc_free(AmfmRoc* roc) { delete roc; }

int amfm_auc_pairwise(const double* scores, const double* targets, size_t n,
                      double gt_threshold, double* out) {
    if (!scores || !targets || !out) return fail("null argument");
    return guarded([&] {
        const std::vector<double> s(scores, scores + n);
        const std::vector<double> t(targets, targets + n);
        *out = amfm::auc_pairwise(s, amfm::binarize_gt(t, gt_threshold));
    });
}

int amfm_confusion(const double* scores, const double* targets, size_t n,
                   double pred_threshold, double gt_threshold, long counts[4]) {
    if (!scores || !targets || !counts) return fail("null argument");
    return guarded([&] {
        const std::vector<double> s(scores, scores + n);
        const std::vector<double> t(targets, targets + n);
        const amfm::ConfusionCounts c =
            amfm::confusion_at(s, amfm::binarize_gt(t, gt_threshold), pred_threshold);
        counts[0] = c.tp;
        counts[1] = c.fp;
        counts[2] = c.tn;
        counts[3] = c.fn;
    });
}

int amfm_block_marks(const double* scores, const double* targets, double pred_threshold,
                     double gt_threshold, int marks[45]) {
    if (!marks) return fail("null argument");
    return guarded([&] {
        const std::vector<int> m = marks_for(scores, targets, pred_threshold, gt_threshold);
        std::copy(m.begin(), m.end(), marks);
    });
}

int amfm_overlay_write(const AmfmImage* frame, const int marks[45], const char* path) {
    if (!frame || !marks || !path) return fail("null argument");
    return guarded([&] {
        amfm::OverlayRequest req;
        req.frame = frame->v;
        req.marks.resize(static_cast<size_t>(amfm::kBlocksPerFrame));
        for (int i = 0; i < amfm::kBlocksPerFrame; ++i) {
            if (marks[i] < 0 || marks[i] > 3) throw amfm::ParamError("unknown mark value");
            req.marks[static_cast<size_t>(i)] = static_cast<amfm::Mark>(marks[i]);
        }
        amfm::write_overlay(req, path);
    });
}

} // extern "C"
