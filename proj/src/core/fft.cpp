#include "core/fft.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace amfm {
namespace {

constexpr double kTau = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(std::vector<cplx>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) { // bit reversal
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTau / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<cplx> dft_direct(const std::vector<cplx>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx s(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            double ang = -kTau * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
            s += x[t] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

} // namespace

std::vector<cplx> fft(const std::vector<cplx>& x) {
    if (x.empty()) throw ParamError("fft: empty input");
    if (!is_pow2(x.size())) return dft_direct(x);
    std::vector<cplx> a = x;
    fft_pow2(a);
    return a;
}

std::vector<cplx> fft_real(const std::vector<double>& x, std::size_t n) {
    if (n == 0) throw ParamError("fft: zero length");
    std::vector<cplx> a(n, cplx(0.0, 0.0));
    const std::size_t m = std::min(n, x.size());
    for (std::size_t i = 0; i < m; ++i) a[i] = cplx(x[i], 0.0);
    return fft(a);
}

std::vector<double> fft_magnitude(const std::vector<double>& x, std::size_t n) {
    std::vector<cplx> spec = fft_real(x, n);
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(spec[i]);
    return mag;
}

std::vector<cplx> fft2(const std::vector<cplx>& g, std::size_t h, std::size_t w) {
    if (g.size() != h * w) throw ParamError("fft2: size mismatch");
    std::vector<cplx> out(h * w);
    std::vector<cplx> row(w);
    for (std::size_t r = 0; r < h; ++r) { // rows first
        for (std::size_t c = 0; c < w; ++c) row[c] = g[r * w + c];
        row = fft(row);
        for (std::size_t c = 0; c < w; ++c) out[r * w + c] = row[c];
    }
    std::vector<cplx> col(h);
    for (std::size_t c = 0; c < w; ++c) { // then columns
        for (std::size_t r = 0; r < h; ++r) col[r] = out[r * w + c];
        col = fft(col);
        for (std::size_t r = 0; r < h; ++r) out[r * w + c] = col[r];
    }
    return out;
}

} // namespace amfm
