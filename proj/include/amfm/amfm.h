#pragma once

/* C interface to the AM-FM face-detection core. Objects are opaque handles
 * created and released by the library; every function that can fail returns a
 * status code and leaves a message in amfm_last_error(). Buffers are always
 * caller-owned: size queries tell how much to allocate, fill calls copy. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define AMFM_API

enum {
    AMFM_OK = 0,
    AMFM_ERR_PARAM = 1,   /* invalid argument or handle */
    AMFM_ERR_DATA = 2,    /* malformed file contents or degenerate data */
    AMFM_ERR_IO = 3,      /* file system failure */
    AMFM_ERR_NUMERIC = 4  /* non-finite values in a computation */
};

/* Frames are tiled on a fixed 5x9 grid of 50x50 blocks (250x450 padded). */
enum {
    AMFM_BLOCK_SIZE = 50,
    AMFM_GRID_ROWS = 5,
    AMFM_GRID_COLS = 9,
    AMFM_BLOCKS_PER_FRAME = 45
};

typedef struct AmfmFilter AmfmFilter;
typedef struct AmfmBank AmfmBank;
typedef struct AmfmImage AmfmImage;
typedef struct AmfmDecomp AmfmDecomp;
typedef struct AmfmDataset AmfmDataset;
typedef struct AmfmNet AmfmNet;
typedef struct AmfmHistory AmfmHistory;
typedef struct AmfmRoc AmfmRoc;

/* Message for the most recent failing call on this thread ("" if none). */
AMFM_API const char* amfm_last_error(void);

/* Non-fatal note from the most recent call on this thread ("" if none),
 * e.g. a corpus directory without an annotations file. */
AMFM_API const char* amfm_last_warning(void);

AMFM_API const char* amfm_version(void);

/* Sub-seed derivation: one user seed, one independent stream per stage. */
AMFM_API uint64_t amfm_mix_seed(uint64_t seed, const char* stage);

/* ---- Hilbert FIR design ---- */

AMFM_API int amfm_design_hilbert(int taps, double kaiser_beta, int n_fft,
                                 double transition, AmfmFilter** out);
AMFM_API int amfm_quantize(const AmfmFilter* filter, int bits, AmfmFilter** out);

typedef struct AmfmSaConfig {
    int max_iterations;   /* > 0 */
    double step;          /* 0 -> default for the bit width */
    double c_exponent;    /* 0 -> warm-up calibration */
    uint64_t rng_seed;
} AmfmSaConfig;

typedef struct AmfmSaInfo {
    double objective;     /* negated MSE of the refined filter */
    double c_used;
    double step_used;
    int accepted;
} AmfmSaInfo;

AMFM_API void amfm_sa_config_default(AmfmSaConfig* config);

/* Simulated-annealing refinement on the filter's fixed-point grid. */
AMFM_API int amfm_sa_refine(const AmfmFilter* filter, int n_fft, double transition,
                            const AmfmSaConfig* config, AmfmFilter** out,
                            AmfmSaInfo* info);

/* Negated mean squared error vs the ideal ramped magnitude (max 0). */
AMFM_API int amfm_objective(const AmfmFilter* filter, int n_fft, double transition,
                            double* out);

AMFM_API int amfm_filter_length(const AmfmFilter* filter, int* out);
/* Fractional bits of the coefficient grid; 0 for a float filter. */
AMFM_API int amfm_filter_bits(const AmfmFilter* filter, int* out);
AMFM_API int amfm_filter_taps(const AmfmFilter* filter, double* out, size_t cap);

/* y[n] = filtered signal aligned by the group delay; y has length n. */
AMFM_API int amfm_apply_fir(const AmfmFilter* filter, const double* x, size_t n,
                            double* y);

/* Cosine probe at frequency u/n: worst deviation from the best linear phase
 * fit (radians) and the delay implied by that fit (samples). */
AMFM_API int amfm_linear_phase_report(const AmfmFilter* filter, int u, int n,
                                      double* max_residual, double* fitted_delay);

AMFM_API int amfm_filter_save(const AmfmFilter* filter, const char* path);
AMFM_API int amfm_filter_load(const char* path, AmfmFilter** out);
AMFM_API void amfm_filter_free(AmfmFilter* filter);

/* ---- Gabor filterbank ---- */

typedef struct AmfmBankConfig {
    int orientations;
    double theta_step;
    double scale2_theta0;
    double omega;
    int kernel_size;
    double sigma_x;
    double sigma_y;
} AmfmBankConfig;

typedef struct AmfmChannelReport {
    double peak_fy;        /* radians/sample, signed */
    double peak_fx;
    double peak_magnitude;
    double dc_gain;
} AmfmChannelReport;

AMFM_API void amfm_bank_config_default(AmfmBankConfig* config);
AMFM_API int amfm_bank_build(const AmfmBankConfig* config, AmfmBank** out);
AMFM_API int amfm_bank_channels(const AmfmBank* bank, int* out);
AMFM_API int amfm_bank_kernel_size(const AmfmBank* bank, int* out);
/* theta, sigma_x, sigma_y, omega of one channel; scale is 1 or 2. */
AMFM_API int amfm_bank_channel_params(const AmfmBank* bank, int channel,
                                      double* theta, double* sigma_x, double* sigma_y,
                                      double* omega, int* scale);
/* Zero-padded FFT peak location/magnitude and DC gain per channel. */
AMFM_API int amfm_bank_report(const AmfmBank* bank, int n_fft,
                              AmfmChannelReport* out, size_t cap);
AMFM_API int amfm_bank_save(const AmfmBank* bank, const char* path);
AMFM_API int amfm_bank_load(const char* path, AmfmBank** out);
AMFM_API void amfm_bank_free(AmfmBank* bank);

/* ---- Images ---- */

/* PGM/PPM (P2/P3/P5/P6); color collapses to luma, samples land in [0,255]. */
AMFM_API int amfm_image_load(const char* path, AmfmImage** out);
/* Row-major doubles; data may be NULL for an all-zero image. */
AMFM_API int amfm_image_create(int h, int w, const double* data, AmfmImage** out);
AMFM_API int amfm_image_size(const AmfmImage* img, int* h, int* w);
AMFM_API int amfm_image_data(const AmfmImage* img, double* out, size_t cap);
/* Affine min/max rescale onto [0,255] for export (constant images go to 0). */
AMFM_API int amfm_image_rescaled(const AmfmImage* img, AmfmImage** out);
/* Keep every second pixel; mean_mode averages each 2x2 cell instead. */
AMFM_API int amfm_image_decimate(const AmfmImage* img, int mean_mode, AmfmImage** out);
/* Zero-pad at bottom/right to the 250x450 block grid. */
AMFM_API int amfm_image_pad(const AmfmImage* img, AmfmImage** out);
AMFM_API int amfm_image_save_pgm(const AmfmImage* img, const char* path);
AMFM_API void amfm_image_free(AmfmImage* img);

/* ---- AM-FM demodulation ---- */

enum {
    AMFM_PLANE_IA = 0,
    AMFM_PLANE_IP = 1,
    AMFM_PLANE_FM = 2,
    AMFM_PLANE_CHANNEL = 3,
    AMFM_PLANE_IF_X = 4,
    AMFM_PLANE_IF_Y = 5
};

/* Row-wise Hilbert response of the image (imaginary analytic part). */
AMFM_API int amfm_analytic_im(const AmfmImage* img, const AmfmFilter* filter,
                              AmfmImage** out);
/* Analytic image -> all bank channels -> per-pixel dominant component. */
AMFM_API int amfm_demodulate(const AmfmImage* img, const AmfmFilter* filter,
                             const AmfmBank* bank, int threads, AmfmDecomp** out);
AMFM_API int amfm_decomp_size(const AmfmDecomp* decomp, int* h, int* w);
/* One AMFM_PLANE_* field as a new image (channel indices as doubles). */
AMFM_API int amfm_decomp_plane(const AmfmDecomp* decomp, int plane, AmfmImage** out);
AMFM_API void amfm_decomp_free(AmfmDecomp* decomp);

/* ---- Synthetic corpus & datasets ---- */

/* Renders frames/<video>_<frame>.pgm plus annotations.csv under out_dir. */
AMFM_API int amfm_synth_corpus(uint64_t seed, int n_videos, int frames_per_video,
                               const char* out_dir, int threads);

/* Builds the block dataset from a corpus directory. input_kind is one of
 * "original", "fm", "ia", "am-fm". A missing annotations.csv is allowed
 * (zero targets) and noted in amfm_last_warning(). */
AMFM_API int amfm_dataset_build(const char* corpus_dir, const char* input_kind,
                                const AmfmFilter* filter, const AmfmBank* bank,
                                int mean_decimation, int threads, AmfmDataset** out);

AMFM_API int amfm_dataset_save(const AmfmDataset* ds, const char* path);
AMFM_API int amfm_dataset_load(const char* path, AmfmDataset** out);
AMFM_API int amfm_dataset_count(const AmfmDataset* ds, size_t* out);
AMFM_API int amfm_dataset_dims(const AmfmDataset* ds, int* h, int* w, int* channels);
AMFM_API int amfm_dataset_input_kind(const AmfmDataset* ds, char* buf, size_t cap);
AMFM_API int amfm_dataset_block(const AmfmDataset* ds, size_t index,
                                float* out, size_t cap);
AMFM_API int amfm_dataset_target(const AmfmDataset* ds, size_t index, float* out);
AMFM_API int amfm_dataset_provenance(const AmfmDataset* ds, size_t index,
                                     char* video_buf, size_t video_cap,
                                     int* frame_index, int* block_row, int* block_col);
AMFM_API int amfm_dataset_video_count(const AmfmDataset* ds, size_t* out);
AMFM_API int amfm_dataset_video_id(const AmfmDataset* ds, size_t index,
                                   char* buf, size_t cap);
/* New dataset keeping only blocks of the listed videos, order preserved. */
AMFM_API int amfm_dataset_select(const AmfmDataset* ds, const char* const* video_ids,
                                 size_t n_ids, AmfmDataset** out);
/* Distinct (video, frame) pairs in canonical order. */
AMFM_API int amfm_dataset_frame_count(const AmfmDataset* ds, size_t* out);
AMFM_API int amfm_dataset_frame_info(const AmfmDataset* ds, size_t index,
                                     char* video_buf, size_t video_cap,
                                     int* frame_index);
/* Reassembled 250x450 plane of one frame (raw values, not display-scaled). */
AMFM_API int amfm_dataset_frame_plane(const AmfmDataset* ds, const char* video_id,
                                      int frame_index, int channel, AmfmImage** out);
/* The 45 overlap targets of one frame in grid order. */
AMFM_API int amfm_dataset_frame_targets(const AmfmDataset* ds, const char* video_id,
                                        int frame_index, double* out, size_t cap);
AMFM_API void amfm_dataset_free(AmfmDataset* ds);

/* Validates a train/test split (disjoint videos, fraction in [0,1)) and
 * flags which train videos form the validation slice: the last
 * round(fraction * n_train) ids in sorted order. val_flags gets n_train
 * entries of 0/1 matching the input order. */
AMFM_API int amfm_split_plan(const char* const* train_ids, size_t n_train,
                             const char* const* test_ids, size_t n_test,
                             double validation_fraction, int* val_flags);

/* ---- Regression nets ---- */

AMFM_API int amfm_net_single(int channels, AmfmNet** out);
AMFM_API int amfm_net_multi(AmfmNet** out);
AMFM_API int amfm_net_lenet5(AmfmNet** out);
AMFM_API int amfm_net_init(AmfmNet* net, uint64_t seed);
AMFM_API int amfm_net_param_count(const AmfmNet* net, size_t* out);
AMFM_API int amfm_net_input_size(const AmfmNet* net, int* out);
AMFM_API int amfm_net_output_size(const AmfmNet* net, int* out);
AMFM_API int amfm_net_get_params(const AmfmNet* net, double* out, size_t cap);
AMFM_API int amfm_net_set_params(AmfmNet* net, const double* params, size_t n);
AMFM_API int amfm_net_forward(const AmfmNet* net, const double* input, size_t n,
                              double* out, size_t cap);
AMFM_API int amfm_net_save(const AmfmNet* net, const char* path);
AMFM_API int amfm_net_load(const char* path, AmfmNet** out);
AMFM_API void amfm_net_free(AmfmNet* net);

typedef struct AmfmTrainConfig {
    int epochs;
    int batch_size;
    double learning_rate;
    const char* optimizer; /* "adam" or "sgd"; NULL means adam */
    double beta1;
    double beta2;
    double epsilon;
    uint64_t rng_seed;
    int shuffle;
    int threads;
} AmfmTrainConfig;

AMFM_API void amfm_train_config_default(AmfmTrainConfig* config);

/* Train the single-block net on a dataset (one sample per block); val may be
 * NULL to skip validation. */
AMFM_API int amfm_train_single(AmfmNet* net, const AmfmDataset* train,
                               const AmfmDataset* val, const AmfmTrainConfig* config,
                               AmfmHistory** out);
/* Train the multi-block net on the single-block net's per-frame scores. */
AMFM_API int amfm_train_multi(AmfmNet* net, const AmfmNet* net_single,
                              const AmfmDataset* train, const AmfmDataset* val,
                              const AmfmTrainConfig* config, AmfmHistory** out);

/* Per-block scores in dataset order. */
AMFM_API int amfm_predict(const AmfmNet* net, const AmfmDataset* ds, int threads,
                          double* out, size_t cap);
/* Single-block scores refined frame-by-frame through the multi-block net,
 * still in dataset order. */
AMFM_API int amfm_refine(const AmfmNet* net_single, const AmfmNet* net_multi,
                         const AmfmDataset* ds, int threads, double* out, size_t cap);

AMFM_API int amfm_history_epochs(const AmfmHistory* history, size_t* out);
/* row = {train_loss, val_loss, train_auc, val_auc} for one epoch. */
AMFM_API int amfm_history_row(const AmfmHistory* history, size_t epoch, double row[4]);
AMFM_API int amfm_history_save_csv(const AmfmHistory* history, const char* path);
AMFM_API int amfm_history_save_svg(const AmfmHistory* history, const char* path);
AMFM_API void amfm_history_free(AmfmHistory* history);

/* ---- Evaluation ---- */

/* ROC from scores vs fractional targets (positive iff target > gt_threshold).
 * Needs both classes present. */
AMFM_API int amfm_roc_build(const double* scores, const double* targets, size_t n,
                            double gt_threshold, AmfmRoc** out);
AMFM_API int amfm_roc_auc(const AmfmRoc* roc, double* out);
AMFM_API int amfm_roc_point_count(const AmfmRoc* roc, size_t* out);
AMFM_API int amfm_roc_point(const AmfmRoc* roc, size_t index,
                            double* fpr, double* tpr, double* threshold);
AMFM_API int amfm_roc_save_csv(const AmfmRoc* roc, const char* path);
AMFM_API int amfm_roc_save_svg(const AmfmRoc* roc, const char* path);
AMFM_API void amfm_roc_free(AmfmRoc* roc);

/* Rank-statistic AUC (pairwise comparison oracle, ties count half). */
AMFM_API int amfm_auc_pairwise(const double* scores, const double* targets, size_t n,
                               double gt_threshold, double* out);
/* counts = {tp, fp, tn, fn} at score >= pred_threshold. */
AMFM_API int amfm_confusion(const double* scores, const double* targets, size_t n,
                            double pred_threshold, double gt_threshold,
                            long counts[4]);

enum {
    AMFM_MARK_NONE = 0,
    AMFM_MARK_TP = 1,
    AMFM_MARK_FP = 2,
    AMFM_MARK_FN = 3
};

/* Per-block verdicts for one frame's 45 scores/targets in grid order. */
AMFM_API int amfm_block_marks(const double* scores, const double* targets,
                              double pred_threshold, double gt_threshold,
                              int marks[45]);
/* PPM of a 250x450 frame (values [0,255]) with colored block verdicts. */
AMFM_API int amfm_overlay_write(const AmfmImage* frame, const int marks[45],
                                const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif
