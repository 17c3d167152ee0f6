#pragma once
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "demod.hpp"
#include "fir.hpp"
#include "gabor.hpp"
#include "grid.hpp"

namespace amfm {

// 5x9 grid of 50x50 blocks over a padded 250x450 frame.
inline constexpr int kBlockSize = 50;
inline constexpr int kGridRows = 5;
inline constexpr int kGridCols = 9;
inline constexpr int kGridHeight = kBlockSize * kGridRows; // 250
inline constexpr int kGridWidth = kBlockSize * kGridCols;  // 450
inline constexpr int kBlocksPerFrame = kGridRows * kGridCols;

enum class InputKind { original, fm, ia, am_fm };

InputKind input_kind_from_string(const std::string& name);
std::string to_string(InputKind kind);
int input_kind_channels(InputKind kind);

struct FaceRect {
    std::string video_id;
    int frame_index = 0; // minute index
    std::string person_tag;
    int x = 0; // top-left, decimated coordinates
    int y = 0;
    int w = 0;
    int h = 0;
};

struct BlockProvenance {
    std::string video_id;
    int frame_index = 0;
    int block_row = 0;
    int block_col = 0;
};

struct BlockDataset {
    int h = kBlockSize;
    int w = kBlockSize;
    int channels = 1;
    InputKind input_kind = InputKind::original;
    std::vector<std::vector<float>> blocks; // h*w*channels, channel index last
    std::vector<float> targets;             // face-pixel fraction in [0,1]
    std::vector<BlockProvenance> provenance;

    std::size_t count() const { return blocks.size(); }
};

struct SplitSpec {
    std::vector<std::string> train_videos;
    std::vector<std::string> test_videos;
    double validation_fraction = 1.0 / 6.0;
};

struct FrameInput {
    std::string video_id;
    int frame_index = 0;
    std::string path; // image file, loaded lazily during the build
};

// Keep every second pixel (offset 0); mean mode averages each 2x2 cell.
// Odd trailing row/column keeps its sample in both modes.
Grid decimate_frame(const Grid& frame, bool mean_mode = false);

// Zeros appended at bottom and right up to 250x450.
Grid pad_to_grid(const Grid& frame);

// Row-major 45 blocks; index = 9*block_row + block_col.
std::vector<Grid> split_blocks(const Grid& frame);

// Union-of-rectangles face pixels inside each block / 2500. Rectangles are
// clipped to the grid; overlapping faces are not double-counted.
std::vector<double> block_overlaps(const std::vector<FaceRect>& rects);

// Scans corpus_dir/frames for <video>_<frame>.pgm/.ppm files; annotation rows
// come from corpus_dir/annotations.csv when present (absent file -> zero
// faces, reported through the optional warning string).
std::vector<FrameInput> enumerate_corpus(const std::string& corpus_dir);
std::vector<FaceRect> corpus_annotations(const std::string& corpus_dir, std::string* warning);

// Per frame: load -> decimate -> (demodulate unless original) -> pad ->
// split; channels by input_kind: original = gray/255, fm = cos(ip),
// ia = per-frame max-normalized amplitude, am-fm = (ia, fm) pair.
BlockDataset build_dataset(const std::vector<FrameInput>& frames,
                           const std::vector<FaceRect>& annotations, InputKind kind,
                           const FirFilter& filter, const KernelBank& bank,
                           bool mean_decimation = false, int threads = 1);

void save_dataset(const BlockDataset& ds, const std::string& path);
BlockDataset load_dataset(const std::string& path);

void save_annotations(const std::vector<FaceRect>& rects, const std::string& path);
std::vector<FaceRect> load_annotations(const std::string& path);

// Subset preserving block order; unknown ids are simply absent.
BlockDataset select_videos(const BlockDataset& ds, const std::set<std::string>& ids);

// Sorted unique video ids present in the dataset.
std::vector<std::string> dataset_video_ids(const BlockDataset& ds);

// Throws if train and test video sets intersect or the fraction is out of range.
void validate_split(const SplitSpec& split);

// Last round(fraction * |train|) train videos, used as the validation slice.
std::vector<std::string> validation_videos(const SplitSpec& split);

} // namespace amfm
