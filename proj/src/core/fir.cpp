#include "fir.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace amfm {

namespace {

double fold_to_half_band(double omega) {
    // Map [0, 2*pi) onto [0, pi] by reflecting the upper half.
    const double two_pi = 2.0 * std::numbers::pi;
    omega = std::fmod(omega, two_pi);
    if (omega < 0.0) omega += two_pi;
    return (omega > std::numbers::pi) ? two_pi - omega : omega;
}

double ramped_magnitude(double omega, double transition) {
    const double edge = transition * std::numbers::pi;
    const double w = fold_to_half_band(omega);
    if (w <= 0.0) return 0.0;
    if (w < edge) return w / edge;
    if (w > std::numbers::pi - edge) return (std::numbers::pi - w) / edge;
    return 1.0;
}

void require_design_args(int taps, double kaiser_beta, int n_fft, double transition) {
    if (taps < 3 || taps % 2 == 0)
        throw ParamError("filter length must be odd and at least 3");
    if (n_fft < 2 * taps || n_fft % 2 != 0)
        throw ParamError("design grid must be even and at least twice the tap count");
    if (!(transition > 0.0) || !(transition < 0.5))
        throw ParamError("transition width must lie in (0, 0.5)");
    if (!(kaiser_beta >= 0.0))
        throw ParamError("kaiser beta must be non-negative");
}

} // namespace

IdealResponse ideal_hilbert_magnitude(int n_fft, double transition) {
    if (n_fft < 2 || n_fft % 2 != 0)
        throw ParamError("ideal response grid must be even and at least 2");
    if (!(transition > 0.0) || !(transition < 0.5))
        throw ParamError("transition width must lie in (0, 0.5)");
    IdealResponse ideal;
    ideal.n_fft = n_fft;
    ideal.transition = transition;
    ideal.magnitude.resize(static_cast<size_t>(n_fft));
    for (int k = 0; k < n_fft; ++k) {
        const double omega = 2.0 * std::numbers::pi * k / n_fft;
        ideal.magnitude[static_cast<size_t>(k)] = ramped_magnitude(omega, transition);
    }
    return ideal;
}

FirFilter design_hilbert_fir(int taps, double kaiser_beta, int n_fft, double transition) {
    require_design_args(taps, kaiser_beta, n_fft, transition);
    const IdealResponse ideal = ideal_hilbert_magnitude(n_fft, transition);
    const int d = (taps - 1) / 2;

    FirFilter filter;
    filter.taps.assign(static_cast<size_t>(taps), 0.0);

    // Inverse transform of -j*sgn(omega)*mag(omega) is a real odd sequence:
    // h[n] = (2/N) * sum_k mag_k * sin(2*pi*k*n/N), one-sided over k < N/2.
    const double i0_beta = std::cyl_bessel_i(0.0, kaiser_beta);
    for (int n = 1; n <= d; ++n) {
        double acc = 0.0;
        for (int k = 1; k < n_fft / 2; ++k) {
            const double ang = 2.0 * std::numbers::pi * k * n / n_fft;
            acc += ideal.magnitude[static_cast<size_t>(k)] * std::sin(ang);
        }
        const double h = 2.0 * acc / n_fft;
        const double frac = static_cast<double>(n) / d;
        const double window = std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(1.0 - frac * frac)) / i0_beta;
        const double tap = h * window;
        filter.taps[static_cast<size_t>(d + n)] = tap;
        filter.taps[static_cast<size_t>(d - n)] = -tap;
    }
    return filter;
}

std::vector<double> apply_fir(const std::vector<double>& signal, const FirFilter& filter) {
    if (filter.taps.empty()) throw ParamError("empty filter");
    const int len = static_cast<int>(signal.size());
    const int ntaps = filter.length();
    const int d = filter.delay();
    std::vector<double> out(signal.size(), 0.0);
    for (int n = 0; n < len; ++n) {
        double acc = 0.0;
        const int k_lo = std::max(0, n + d - (len - 1));
        const int k_hi = std::min(ntaps - 1, n + d);
        for (int k = k_lo; k <= k_hi; ++k)
            acc += filter.taps[static_cast<size_t>(k)] * signal[static_cast<size_t>(n + d - k)];
        out[static_cast<size_t>(n)] = acc;
    }
    return out;
}

FirFilter quantize(const FirFilter& filter, int bits) {
    if (bits < 1 || bits > 30) throw ParamError("fractional bit width must lie in [1, 30]");
    const double step = std::ldexp(1.0, -bits);
    FirFilter q;
    q.taps.reserve(filter.taps.size());
    for (double t : filter.taps) {
        double v = std::round(t / step) * step;
        if (v < -1.0) v = -1.0;
        if (v > 1.0 - step) v = 1.0 - step;
        q.taps.push_back(v);
    }
    q.format = FixedPointFormat{bits, step};
    return q;
}

PhaseReport linear_phase_report(const FirFilter& filter, int u, int n) {
    if (n < 20) throw ParamError("probe length too short");
    if (u < 1 || u >= n / 2) throw ParamError("probe frequency index out of range");
    std::vector<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        x[static_cast<size_t>(i)] = std::cos(2.0 * std::numbers::pi * u * i / n);
    const std::vector<double> y = apply_fir(x, filter);

    // Unwrapped phase of x + j*y, then a least-squares line over the interior
    // 80% of samples (boundary transients excluded).
    std::vector<double> phase(static_cast<size_t>(n));
    double prev = std::atan2(y[0], x[0]);
    phase[0] = prev;
    double offset = 0.0;
    for (int i = 1; i < n; ++i) {
        const double raw = std::atan2(y[static_cast<size_t>(i)], x[static_cast<size_t>(i)]);
        double delta = raw - prev;
        while (delta > std::numbers::pi) { delta -= 2.0 * std::numbers::pi; offset -= 2.0 * std::numbers::pi; }
        while (delta < -std::numbers::pi) { delta += 2.0 * std::numbers::pi; offset += 2.0 * std::numbers::pi; }
        phase[static_cast<size_t>(i)] = raw + offset;
        prev = raw;
    }

    const int lo = n / 10;
    const int hi = n - n / 10;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const int count = hi - lo;
    for (int i = lo; i < hi; ++i) {
        const double fi = static_cast<double>(i);
        const double ph = phase[static_cast<size_t>(i)];
        sx += fi;
        sy += ph;
        sxx += fi * fi;
        sxy += fi * ph;
    }
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw NumericError("degenerate phase fit");
    const double slope = (count * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / count;
    if (slope == 0.0) throw NumericError("flat phase fit");

    PhaseReport report;
    for (int i = lo; i < hi; ++i) {
        const double resid = std::abs(phase[static_cast<size_t>(i)] - (slope * i + intercept));
        report.max_residual = std::max(report.max_residual, resid);
    }
    report.fitted_delay = -intercept / slope;
    return report;
}

void save_filter(const FirFilter& filter, const std::string& path) {
    if (filter.taps.empty()) throw ParamError("empty filter");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "taps=" << filter.length() << " bits=";
    if (filter.format)
        out << filter.format->bits;
    else
        out << "float";
    out << "\n";
    char buf[64];
    for (double t : filter.taps) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

FirFilter load_filter(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("missing filter header");

    int count = 0;
    char bits_text[16] = {0};
    if (std::sscanf(header.c_str(), "taps=%d bits=%15s", &count, bits_text) != 2)
        throw DataError("malformed filter header: " + header);
    if (count < 3 || count % 2 == 0)
        throw DataError("filter length must be odd and at least 3");

    FirFilter filter;
    if (std::string(bits_text) != "float") {
        int bits = 0;
        std::istringstream bs(bits_text);
        if (!(bs >> bits) || bits < 1 || bits > 30)
            throw DataError("bad bit width in filter header: " + header);
        filter.format = FixedPointFormat{bits, std::ldexp(1.0, -bits)};
    }

    filter.taps.reserve(static_cast<size_t>(count));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v = 0.0;
        if (!(ls >> v)) throw DataError("bad coefficient line: " + line);
        std::string rest;
        if (ls >> rest) throw DataError("trailing junk on coefficient line: " + line);
        filter.taps.push_back(v);
    }
    if (static_cast<int>(filter.taps.size()) != count)
        throw DataError("coefficient count does not match header");

    const int d = filter.delay();
    if (filter.taps[static_cast<size_t>(d)] != 0.0)
        throw DataError("center coefficient must be zero");
    for (int k = 0; k < count; ++k)
        if (filter.taps[static_cast<size_t>(k)] != -filter.taps[static_cast<size_t>(count - 1 - k)])
            throw DataError("coefficients must be anti-symmetric");
    if (filter.format) {
        for (double t : filter.taps) {
            const double q = t / filter.format->step;
            if (q != std::round(q))
                throw DataError("coefficient off the fixed-point grid");
        }
    }
    return filter;
}

} // namespace amfm
