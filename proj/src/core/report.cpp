#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "errors.hpp"
#include "image.hpp"

namespace amfm {

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_roc_csv(const RocCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "fpr,tpr,threshold\n";
    for (const RocPoint& p : curve.points)
        out << format_g9(p.fpr) << "," << format_g9(p.tpr) << "," << format_g9(p.threshold) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_history_csv(const History& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "epoch,train_loss,val_loss,train_auc,val_auc\n";
    for (size_t e = 0; e < history.train_loss.size(); ++e)
        out << (e + 1) << "," << format_g9(history.train_loss[e]) << ","
            << format_g9(history.val_loss[e]) << "," << format_g9(history.train_auc[e]) << ","
            << format_g9(history.val_auc[e]) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

namespace {

constexpr int kSvgW = 640;
constexpr int kSvgH = 480;
constexpr int kMargin = 56;

struct PlotBox {
    double x0, x1, y0, y1; // data ranges

    double px(double x) const {
        return kMargin + (x - x0) / (x1 - x0) * (kSvgW - 2 * kMargin);
    }
    double py(double y) const {
        return kSvgH - kMargin - (y - y0) / (y1 - y0) * (kSvgH - 2 * kMargin);
    }
};

void svg_header(std::ofstream& out, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgW << "\" height=\"" << kSvgH
        << "\" viewBox=\"0 0 " << kSvgW << " " << kSvgH << "\">\n"
        << "<rect width=\"" << kSvgW << "\" height=\"" << kSvgH << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kSvgW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";
}

void svg_axes(std::ofstream& out, const std::string& xlabel, const std::string& ylabel) {
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kSvgH - kMargin << "\" x2=\"" << kSvgW - kMargin
        << "\" y2=\"" << kSvgH - kMargin << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
        << kSvgH - kMargin << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kSvgW / 2 << "\" y=\"" << kSvgH - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
        << "</text>\n"
        << "<text x=\"18\" y=\"" << kSvgH / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
        << kSvgH / 2 << ")\">" << ylabel << "</text>\n";
}

void svg_polyline(std::ofstream& out, const PlotBox& box, const std::vector<double>& xs,
                  const std::vector<double>& ys, const std::string& color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out << " ";
        out << format_g9(box.px(xs[i])) << "," << format_g9(box.py(ys[i]));
    }
    out << "\"/>\n";
}

} // namespace

void write_roc_svg(const RocCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    svg_header(out, "ROC");
    svg_axes(out, "false positive rate", "true positive rate");
    PlotBox box{0.0, 1.0, 0.0, 1.0};
    std::vector<double> xs, ys;
    for (const RocPoint& p : curve.points) {
        xs.push_back(p.fpr);
        ys.push_back(p.tpr);
    }
    svg_polyline(out, box, {0.0, 1.0}, {0.0, 1.0}, "#bbbbbb"); // chance diagonal
    svg_polyline(out, box, xs, ys, "#1f6fd0");
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_loss_svg(const History& history, const std::string& path) {
    if (history.train_loss.empty()) throw ParamError("empty history");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    svg_header(out, "Loss per epoch");
    svg_axes(out, "epoch", "loss");

    double top = 0.0;
    for (double v : history.train_loss) top = std::max(top, v);
    for (double v : history.val_loss) top = std::max(top, v);
    if (top <= 0.0) top = 1.0;
    PlotBox box{1.0, static_cast<double>(history.train_loss.size()), 0.0, top};
    if (history.train_loss.size() == 1) box.x1 = 2.0;

    std::vector<double> xs(history.train_loss.size());
    for (size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i + 1);
    svg_polyline(out, box, xs, history.train_loss, "#1f6fd0");
    bool any_val = false;
    for (double v : history.val_loss)
        if (v != 0.0) any_val = true;
    if (any_val) svg_polyline(out, box, xs, history.val_loss, "#d07a1f");
    out << "<text x=\"" << kSvgW - kMargin << "\" y=\"40\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f6fd0\">train</text>\n";
    if (any_val)
        out << "<text x=\"" << kSvgW - kMargin << "\" y=\"56\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d07a1f\">validation</text>\n";
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_overlay(const OverlayRequest& request, const std::string& path) {
    const Grid& frame = request.frame;
    if (frame.h != kGridHeight || frame.w != kGridWidth)
        throw ParamError("overlay frame must be 250x450");
    if (request.marks.size() != static_cast<size_t>(kBlocksPerFrame))
        throw ParamError("overlay needs 45 marks");

    Grid r = frame, g = frame, b = frame;
    for (int br = 0; br < kGridRows; ++br) {
        for (int bc = 0; bc < kGridCols; ++bc) {
            const Mark mark = request.marks[static_cast<size_t>(br * kGridCols + bc)];
            if (mark == Mark::none) continue;
            double cr = 0, cg = 0, cb = 0;
            if (mark == Mark::tp) { cr = 0; cg = 200; cb = 0; }
            if (mark == Mark::fp) { cr = 220; cg = 0; cb = 0; }
            if (mark == Mark::fn) { cr = 230; cg = 220; cb = 0; }
            const int cy = br * kBlockSize + kBlockSize / 2;
            const int cx = bc * kBlockSize + kBlockSize / 2;
            for (int dy = -3; dy <= 3; ++dy) {
                for (int dx = -3; dx <= 3; ++dx) {
                    r.at(cy + dy, cx + dx) = cr;
                    g.at(cy + dy, cx + dx) = cg;
                    b.at(cy + dy, cx + dx) = cb;
                }
            }
        }
    }
    save_ppm(r, g, b, path);
}

void emit_report(const History& history, const RocCurve& curve,
                 const std::vector<OverlayRequest>& overlays, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory: " + out_dir);
    write_roc_csv(curve, out_dir + "/roc.csv");
    write_history_csv(history, out_dir + "/history.csv");
    write_roc_svg(curve, out_dir + "/roc.svg");
    write_loss_svg(history, out_dir + "/loss.svg");
    for (const OverlayRequest& o : overlays)
        write_overlay(o, out_dir + "/overlay_" + o.video_id + "_" + std::to_string(o.frame_index) +
                             ".ppm");
}

} // namespace amfm
