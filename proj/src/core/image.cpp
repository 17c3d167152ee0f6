#include "image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "errors.hpp"

namespace amfm {

namespace {

// Skips whitespace and '#' comments, then reads one nonnegative integer.
int next_token(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF) throw DataError("truncated header: " + path);
    if (!std::isdigit(c)) throw DataError("malformed header: " + path);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 30) throw DataError("header value out of range: " + path);
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(v);
}

int binary_sample(std::istream& in, int maxval, const std::string& path) {
    int v = in.get();
    if (v == EOF) throw DataError("truncated pixel data: " + path);
    if (maxval > 255) {
        const int lo = in.get();
        if (lo == EOF) throw DataError("truncated pixel data: " + path);
        v = (v << 8) | lo; // big-endian, per the format
    }
    return v;
}

unsigned char clamp_byte(double v) {
    const double r = std::round(v);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<unsigned char>(r);
}

} // namespace

Grid load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);

    const int magic0 = in.get();
    const int magic1 = in.get();
    if (magic0 != 'P' || (magic1 != '2' && magic1 != '3' && magic1 != '5' && magic1 != '6'))
        throw DataError("unsupported image format: " + path);
    const bool color = magic1 == '3' || magic1 == '6';
    const bool binary = magic1 == '5' || magic1 == '6';

    const int w = next_token(in, path);
    const int h = next_token(in, path);
    const int maxval = next_token(in, path);
    if (w < 1 || h < 1) throw DataError("bad image dimensions: " + path);
    if (maxval < 1 || maxval > 65535) throw DataError("bad maxval: " + path);
    if (binary) {
        const int sep = in.get();
        if (sep == EOF || !std::isspace(sep)) throw DataError("missing header separator: " + path);
    }

    const double scale = 255.0 / maxval;
    Grid img(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double value;
            if (color) {
                int rgb[3];
                for (int& s : rgb) {
                    s = binary ? binary_sample(in, maxval, path) : next_token(in, path);
                    if (s > maxval) throw DataError("sample exceeds maxval: " + path);
                }
                value = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
            } else {
                const int s = binary ? binary_sample(in, maxval, path) : next_token(in, path);
                if (s > maxval) throw DataError("sample exceeds maxval: " + path);
                value = s;
            }
            img.at(r, c) = value * scale;
        }
    }
    return img;
}

void save_pgm(const Grid& img, const std::string& path) {
    if (img.h < 1 || img.w < 1) throw ParamError("empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.w));
    for (int r = 0; r < img.h; ++r) {
        for (int c = 0; c < img.w; ++c) row[static_cast<size_t>(c)] = clamp_byte(img.at(r, c));
        out.write(reinterpret_cast<const char*>(row.data()), img.w);
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_ppm(const Grid& r, const Grid& g, const Grid& b, const std::string& path) {
    if (r.h < 1 || r.w < 1) throw ParamError("empty image");
    if (g.h != r.h || g.w != r.w || b.h != r.h || b.w != r.w)
        throw ParamError("color planes must share dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P6\n" << r.w << " " << r.h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(r.w) * 3);
    for (int y = 0; y < r.h; ++y) {
        for (int x = 0; x < r.w; ++x) {
            row[static_cast<size_t>(x) * 3 + 0] = clamp_byte(r.at(y, x));
            row[static_cast<size_t>(x) * 3 + 1] = clamp_byte(g.at(y, x));
            row[static_cast<size_t>(x) * 3 + 2] = clamp_byte(b.at(y, x));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

Grid rescale_for_export(const Grid& img) {
    if (img.data.empty()) throw ParamError("empty image");
    const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double lo = *lo_it, hi = *hi_it;
    Grid out(img.h, img.w);
    if (hi > lo) {
        // divide first so the endpoints map to exactly 0 and 255
        const double range = hi - lo;
        for (size_t i = 0; i < img.data.size(); ++i)
            out.data[i] = (img.data[i] - lo) / range * 255.0;
    }
    return out;
}

} // namespace amfm
