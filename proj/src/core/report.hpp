#pragma once
#include <string>
#include <vector>

#include "eval.hpp"
#include "grid.hpp"
#include "net.hpp"

namespace amfm {

// All numeric report output goes through this: 9 significant digits.
std::string format_g9(double v);

void write_roc_csv(const RocCurve& curve, const std::string& path);
void write_history_csv(const History& history, const std::string& path);

// Minimal self-contained SVG polyline plots.
void write_roc_svg(const RocCurve& curve, const std::string& path);
void write_loss_svg(const History& history, const std::string& path);

// 7x7 colored squares at block centers over the grayscale frame:
// green TP, red FP, yellow FN.
struct OverlayRequest {
    std::string video_id;
    int frame_index = 0;
    Grid frame; // 250x450, values [0,255]
    std::vector<Mark> marks;
};

void write_overlay(const OverlayRequest& request, const std::string& path);

// roc.csv, history.csv, roc.svg, loss.svg, overlay_<video>_<frame>.ppm.
void emit_report(const History& history, const RocCurve& curve,
                 const std::vector<OverlayRequest>& overlays, const std::string& out_dir);

} // namespace amfm
