#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "grid.hpp"

namespace amfm {

// Full-resolution frame size before decimation.
inline constexpr int kSynthHeight = 480;
inline constexpr int kSynthWidth = 858;

struct SynthFrame {
    Grid image;                  // 480x858, values in [0, 255]
    std::vector<FaceRect> rects; // decimated coordinates, one per face
};

std::string synth_video_id(int video_index); // "v00", "v01", ...

// Deterministic frame: cluttered low-frequency background plus 1-4 textured
// elliptical faces (oriented sinusoid inside an ellipse). Each frame derives
// its own RNG stream from (seed, video, frame), so generation order and
// threading never change the pixels. Rects bound the rendered face pixels
// that survive decimation, exactly.
SynthFrame synth_frame(std::uint64_t seed, int video_index, int frame_index);

// Renders the whole corpus under out_dir: frames/<video>_<frame>.pgm plus
// annotations.csv at the top level.
void write_synth_corpus(std::uint64_t seed, int n_videos, int frames_per_video,
                        const std::string& out_dir, int threads = 1);

} // namespace amfm
