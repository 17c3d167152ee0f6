#include "demod.hpp"

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "parallel.hpp"

namespace amfm {

namespace {

double wrap_to_half_open(double d) {
    // Map to (-pi, pi].
    double w = std::remainder(d, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

} // namespace

AnalyticImage analytic_image(const Grid& gray, const FirFilter& filter) {
    if (gray.h < 1 || gray.w < 1) throw ParamError("empty image");
    if (gray.w < filter.length()) throw ParamError("image narrower than the filter");
    AnalyticImage out;
    out.re = gray;
    out.im = Grid(gray.h, gray.w);
    std::vector<double> row(static_cast<size_t>(gray.w));
    for (int r = 0; r < gray.h; ++r) {
        for (int c = 0; c < gray.w; ++c) row[static_cast<size_t>(c)] = gray.at(r, c);
        const std::vector<double> hrow = apply_fir(row, filter);
        for (int c = 0; c < gray.w; ++c) out.im.at(r, c) = hrow[static_cast<size_t>(c)];
    }
    return out;
}

ComplexGrid channel_filter(const AnalyticImage& img, const GaborKernel& kernel) {
    if (img.re.h != img.im.h || img.re.w != img.im.w)
        throw ParamError("analytic image planes must share dimensions");
    const int h = img.re.h, w = img.re.w;
    const int size = kernel.values.h;
    const int off = (size - 1) / 2;
    ComplexGrid out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::complex<double> acc(0.0, 0.0);
            const int i_lo = std::max(0, off - r);
            const int i_hi = std::min(size - 1, h - 1 - r + off);
            const int j_lo = std::max(0, off - c);
            const int j_hi = std::min(size - 1, w - 1 - c + off);
            for (int i = i_lo; i <= i_hi; ++i) {
                const int rr = r + i - off;
                for (int j = j_lo; j <= j_hi; ++j) {
                    const int cc = c + j - off;
                    acc += kernel.values.at(i, j) *
                           std::complex<double>(img.re.at(rr, cc), img.im.at(rr, cc));
                }
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

AmFmDecomposition dca(const std::vector<ComplexGrid>& responses) {
    if (responses.empty()) throw ParamError("no channel responses");
    const int h = responses.front().h, w = responses.front().w;
    for (const ComplexGrid& g : responses)
        if (g.h != h || g.w != w) throw ParamError("channel responses must share dimensions");

    AmFmDecomposition d;
    d.ia = Grid(h, w);
    d.ip = Grid(h, w);
    d.fm = Grid(h, w);
    d.channel = GridT<int>(h, w);
    const int n = static_cast<int>(responses.size());
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int best = 0;
            double best_mag = std::abs(responses[0].at(r, c));
            for (int k = 1; k < n; ++k) {
                const double m = std::abs(responses[static_cast<size_t>(k)].at(r, c));
                if (m > best_mag) {
                    best_mag = m;
                    best = k;
                }
            }
            const std::complex<double> v = responses[static_cast<size_t>(best)].at(r, c);
            double phase = (best_mag == 0.0) ? 0.0 : std::atan2(v.imag(), v.real());
            if (phase == -std::numbers::pi) phase = std::numbers::pi;
            d.channel.at(r, c) = best;
            d.ia.at(r, c) = best_mag;
            d.ip.at(r, c) = phase;
            d.fm.at(r, c) = std::cos(phase);
        }
    }
    return d;
}

IfField instantaneous_frequency(const Grid& ip) {
    if (ip.h < 3 || ip.w < 3) throw ParamError("phase map must be at least 3x3");
    IfField f;
    f.dpsi_dx = Grid(ip.h, ip.w);
    f.dpsi_dy = Grid(ip.h, ip.w);
    for (int r = 0; r < ip.h; ++r) {
        for (int c = 0; c < ip.w; ++c) {
            double dx;
            if (c == 0)
                dx = wrap_to_half_open(ip.at(r, 1) - ip.at(r, 0));
            else if (c == ip.w - 1)
                dx = wrap_to_half_open(ip.at(r, c) - ip.at(r, c - 1));
            else
                dx = 0.5 * (wrap_to_half_open(ip.at(r, c + 1) - ip.at(r, c)) +
                            wrap_to_half_open(ip.at(r, c) - ip.at(r, c - 1)));
            double dy;
            if (r == 0)
                dy = wrap_to_half_open(ip.at(1, c) - ip.at(0, c));
            else if (r == ip.h - 1)
                dy = wrap_to_half_open(ip.at(r, c) - ip.at(r - 1, c));
            else
                dy = 0.5 * (wrap_to_half_open(ip.at(r + 1, c) - ip.at(r, c)) +
                            wrap_to_half_open(ip.at(r, c) - ip.at(r - 1, c)));
            f.dpsi_dx.at(r, c) = dx;
            f.dpsi_dy.at(r, c) = dy;
        }
    }
    return f;
}

AmFmDecomposition demodulate(const Grid& gray, const FirFilter& filter, const KernelBank& bank,
                             int threads) {
    if (bank.empty()) throw ParamError("empty bank");
    const AnalyticImage analytic = analytic_image(gray, filter);
    std::vector<ComplexGrid> responses(bank.size());
    parallel_for(static_cast<int>(bank.size()), threads, [&](int k) {
        responses[static_cast<size_t>(k)] = channel_filter(analytic, bank[static_cast<size_t>(k)]);
    });
    return dca(responses);
}

} // namespace amfm
