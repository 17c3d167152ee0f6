#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <numbers>

#include "errors.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace amfm {

std::string synth_video_id(int video_index) {
    if (video_index < 0 || video_index > 99) throw ParamError("video index out of range");
    char buf[8];
    std::snprintf(buf, sizeof buf, "v%02d", video_index);
    return buf;
}

SynthFrame synth_frame(std::uint64_t seed, int video_index, int frame_index) {
    if (frame_index < 0) throw ParamError("frame index must be nonnegative");
    const std::string video_id = synth_video_id(video_index);
    Rng rng(mix_seed(seed, video_id + "_" + std::to_string(frame_index)));

    const int H = kSynthHeight, W = kSynthWidth;
    SynthFrame out;
    out.image = Grid(H, W);
    Grid& img = out.image;

    // 1. Background: base level, gentle gradient, low-frequency clutter waves.
    const double base = 110.0 + 50.0 * rng.uniform();
    const double grad_v = -30.0 + 60.0 * rng.uniform();
    const double grad_h = -30.0 + 60.0 * rng.uniform();
    struct Wave {
        double amp, freq, cos_a, sin_a, phase;
    };
    Wave waves[3];
    for (Wave& wv : waves) {
        wv.amp = 8.0 + 12.0 * rng.uniform();
        wv.freq = 0.01 + 0.04 * rng.uniform();
        const double angle = std::numbers::pi * rng.uniform();
        wv.cos_a = std::cos(angle);
        wv.sin_a = std::sin(angle);
        wv.phase = 2.0 * std::numbers::pi * rng.uniform();
    }
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            double v = base + grad_v * (static_cast<double>(r) / H - 0.5) +
                       grad_h * (static_cast<double>(c) / W - 0.5);
            for (const Wave& wv : waves)
                v += wv.amp * std::sin(wv.freq * (c * wv.cos_a + r * wv.sin_a) + wv.phase);
            img.at(r, c) = v;
        }
    }

    // 2. Untextured clutter rectangles (books, laptops, paper).
    const int n_rects = 2 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n_rects; ++i) {
        const int rw = 40 + static_cast<int>(rng.below(120));
        const int rh = 30 + static_cast<int>(rng.below(80));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(W - rw)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(H - rh)));
        const double delta = (rng.below(2) ? 1.0 : -1.0) * (15.0 + static_cast<double>(rng.below(25)));
        for (int r = y0; r < y0 + rh; ++r)
            for (int c = x0; c < x0 + rw; ++c) img.at(r, c) += delta;
    }

    // 3. Faces: mid-frequency oriented sinusoid inside an axis-aligned
    // ellipse. The carrier lands near pi/2 rad/sample after decimation,
    // inside the filterbank's second scale, with its row component kept
    // inside the Hilbert passband.
    const int n_faces = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n_faces; ++i) {
        const int ax = 30 + static_cast<int>(rng.below(41)); // semi-axes, full-res pixels
        const int ay = 40 + static_cast<int>(rng.below(51));
        const int cx = ax + 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(W - 2 * (ax + 4))));
        const int cy = ay + 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(H - 2 * (ay + 4))));
        const double mean = 90.0 + 50.0 * rng.uniform();
        const double amp = mean * (0.80 + 0.15 * rng.uniform());
        const double carrier = 0.60 + 0.25 * rng.uniform(); // full-res rad/sample
        const double tex_angle = -0.85 + 1.70 * rng.uniform();
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        const double ca = std::cos(tex_angle), sa = std::sin(tex_angle);

        int min_ex = W, max_ex = -1, min_ey = H, max_ey = -1; // even-coordinate bbox
        for (int r = std::max(0, cy - ay); r <= std::min(H - 1, cy + ay); ++r) {
            const double fy = static_cast<double>(r - cy) / ay;
            for (int c = std::max(0, cx - ax); c <= std::min(W - 1, cx + ax); ++c) {
                const double fx = static_cast<double>(c - cx) / ax;
                if (fx * fx + fy * fy > 1.0) continue;
                img.at(r, c) = mean + amp * std::sin(carrier * (c * ca + r * sa) + phase);
                if (r % 2 == 0 && c % 2 == 0) {
                    min_ex = std::min(min_ex, c);
                    max_ex = std::max(max_ex, c);
                    min_ey = std::min(min_ey, r);
                    max_ey = std::max(max_ey, r);
                }
            }
        }
        if (max_ex < 0) continue; // nothing survives decimation (cannot happen at these sizes)

        FaceRect rect;
        rect.video_id = video_id;
        rect.frame_index = frame_index;
        rect.person_tag = "p" + std::to_string(i);
        rect.x = min_ex / 2;
        rect.y = min_ey / 2;
        rect.w = max_ex / 2 - min_ex / 2 + 1;
        rect.h = max_ey / 2 - min_ey / 2 + 1;
        out.rects.push_back(std::move(rect));
    }

    for (double& v : img.data) v = std::clamp(v, 0.0, 255.0);
    return out;
}

void write_synth_corpus(std::uint64_t seed, int n_videos, int frames_per_video,
                        const std::string& out_dir, int threads) {
    if (n_videos < 1 || frames_per_video < 1)
        throw ParamError("corpus needs at least one video and one frame");
    std::error_code ec;
    std::filesystem::create_directories(out_dir + "/frames", ec);
    if (ec) throw IoError("cannot create directory: " + out_dir + "/frames");

    const int total = n_videos * frames_per_video;
    std::vector<std::vector<FaceRect>> rects(static_cast<size_t>(total));
    parallel_for(total, threads, [&](int i) {
        const int v = i / frames_per_video;
        const int f = i % frames_per_video;
        SynthFrame frame = synth_frame(seed, v, f);
        save_pgm(frame.image,
                 out_dir + "/frames/" + synth_video_id(v) + "_" + std::to_string(f) + ".pgm");
        rects[static_cast<size_t>(i)] = std::move(frame.rects);
    });

    std::vector<FaceRect> all;
    for (const auto& r : rects) all.insert(all.end(), r.begin(), r.end());
    save_annotations(all, out_dir + "/annotations.csv");
}

} // namespace amfm
