#include "gabor.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "errors.hpp"
#include "fft.hpp"

namespace amfm {

namespace {

struct QuadForm {
    double a, b, c;
};

QuadForm rotated_form(double theta, double sigma_x, double sigma_y) {
    const double ct = std::cos(theta), st = std::sin(theta);
    const double s2 = std::sin(2.0 * theta);
    const double ix = 1.0 / (2.0 * sigma_x * sigma_x);
    const double iy = 1.0 / (2.0 * sigma_y * sigma_y);
    QuadForm f;
    f.a = ct * ct * ix + st * st * iy;
    f.b = -s2 / (4.0 * sigma_x * sigma_x) + s2 / (4.0 * sigma_y * sigma_y);
    f.c = st * st * ix + ct * ct * iy;
    return f;
}

void require_kernel_args(double sigma_x, double sigma_y, int size) {
    if (size < 3 || size % 2 == 0) throw ParamError("kernel size must be odd and at least 3");
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw ParamError("sigmas must be positive");
}

Grid envelope(double theta, double sigma_x, double sigma_y, int size) {
    const QuadForm f = rotated_form(theta, sigma_x, sigma_y);
    const int off = (size - 1) / 2;
    Grid env(size, size);
    for (int r = 0; r < size; ++r) {
        const double y = r - off;
        for (int c = 0; c < size; ++c) {
            const double x = c - off;
            env.at(r, c) = std::exp(-(f.a * x * x + 2.0 * f.b * x * y + f.c * y * y));
        }
    }
    return env;
}

} // namespace

GaborKernel rotated_gaussian_kernel(double theta, double sigma_x, double sigma_y, int size) {
    require_kernel_args(sigma_x, sigma_y, size);
    const Grid env = envelope(theta, sigma_x, sigma_y, size);
    double sum = 0.0;
    for (double v : env.data) sum += v;

    GaborKernel k;
    k.values = ComplexGrid(size, size);
    for (size_t i = 0; i < env.data.size(); ++i) k.values.data[i] = env.data[i] / sum;
    k.theta = theta;
    k.sigma_x = sigma_x;
    k.sigma_y = sigma_y;
    k.omega = 0.0;
    k.scale = 1;
    return k;
}

GaborKernel gabor_kernel(double theta, double sigma_x, double sigma_y, double omega, int size) {
    require_kernel_args(sigma_x, sigma_y, size);
    if (!(omega > 0.0) || !(omega < std::numbers::pi))
        throw ParamError("omega must lie in (0, pi)");
    const Grid env = envelope(theta, sigma_x, sigma_y, size);
    const int off = (size - 1) / 2;
    const double ux = omega * std::cos(theta);
    const double uy = omega * std::sin(theta);

    // The narrow envelope aliases enough power into DC that the textbook
    // modulation keeps a visible zero-frequency term; subtracting the
    // envelope-weighted carrier mean cancels it exactly.
    ComplexGrid mod(size, size);
    std::complex<double> mean(0.0, 0.0);
    double env_sum = 0.0;
    for (int r = 0; r < size; ++r) {
        const double y = r - off;
        for (int c = 0; c < size; ++c) {
            const double x = c - off;
            const double phase = ux * x + uy * y;
            mod.at(r, c) = std::complex<double>(std::cos(phase), std::sin(phase));
            mean += env.at(r, c) * mod.at(r, c);
            env_sum += env.at(r, c);
        }
    }
    mean /= env_sum;

    GaborKernel k;
    k.values = ComplexGrid(size, size);
    double abs_sum = 0.0;
    for (size_t i = 0; i < env.data.size(); ++i) {
        k.values.data[i] = env.data[i] * (mod.data[i] - mean);
        abs_sum += std::abs(k.values.data[i]);
    }
    for (auto& v : k.values.data) v /= abs_sum;
    k.theta = theta;
    k.sigma_x = sigma_x;
    k.sigma_y = sigma_y;
    k.omega = omega;
    k.scale = 2;
    return k;
}

KernelBank build_bank(const BankConfig& config) {
    if (config.orientations < 1) throw ParamError("orientations must be at least 1");
    require_kernel_args(config.sigma_x, config.sigma_y, config.kernel_size);
    if (!(config.omega > 0.0) || !(config.omega < std::numbers::pi))
        throw ParamError("omega must lie in (0, pi)");

    KernelBank bank;
    bank.reserve(static_cast<size_t>(2 * config.orientations));
    for (int k = 0; k < config.orientations; ++k)
        bank.push_back(rotated_gaussian_kernel(k * config.theta_step, config.sigma_x,
                                               config.sigma_y, config.kernel_size));
    for (int k = 0; k < config.orientations; ++k)
        bank.push_back(gabor_kernel(config.scale2_theta0 + k * config.theta_step, config.sigma_x,
                                    config.sigma_y, config.omega, config.kernel_size));
    return bank;
}

std::vector<ChannelReport> bank_frequency_report(const KernelBank& bank, int n_fft) {
    if (bank.empty()) throw ParamError("empty bank");
    const int size = bank.front().values.h;
    if (n_fft < 4 * size) throw ParamError("report grid must be at least 4x the kernel size");

    std::vector<ChannelReport> reports;
    reports.reserve(bank.size());
    const size_t n = static_cast<size_t>(n_fft);
    for (const GaborKernel& k : bank) {
        std::vector<cplx> padded(n * n, cplx(0.0, 0.0));
        for (int r = 0; r < k.values.h; ++r)
            for (int c = 0; c < k.values.w; ++c)
                padded[static_cast<size_t>(r) * n + static_cast<size_t>(c)] = k.values.at(r, c);
        const std::vector<cplx> spectrum = fft2(padded, n, n);

        ChannelReport rep;
        size_t best = 0;
        double best_mag = -1.0;
        for (size_t i = 0; i < spectrum.size(); ++i) {
            const double m = std::abs(spectrum[i]);
            if (m > best_mag) {
                best_mag = m;
                best = i;
            }
        }
        auto bin_to_freq = [n_fft](int bin) {
            double f = 2.0 * std::numbers::pi * bin / n_fft;
            if (f > std::numbers::pi) f -= 2.0 * std::numbers::pi;
            return f;
        };
        rep.peak_fy = bin_to_freq(static_cast<int>(best / n));
        rep.peak_fx = bin_to_freq(static_cast<int>(best % n));
        rep.peak_magnitude = best_mag;
        rep.dc_gain = std::abs(spectrum[0]);
        reports.push_back(rep);
    }
    return reports;
}

void save_bank(const KernelBank& bank, const std::string& path) {
    if (bank.empty()) throw ParamError("empty bank");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[128];
    for (const GaborKernel& k : bank) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g %.17g", k.scale, k.theta, k.sigma_x,
                      k.sigma_y, k.omega);
        out << buf << "\n";
        for (int r = 0; r < k.values.h; ++r) {
            for (int c = 0; c < k.values.w; ++c) {
                const cplx v = k.values.at(r, c);
                std::snprintf(buf, sizeof buf, "%.17g,%.17g", v.real(), v.imag());
                out << (c ? " " : "") << buf;
            }
            out << "\n";
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

KernelBank load_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    KernelBank bank;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        GaborKernel k;
        {
            std::istringstream hs(line);
            if (!(hs >> k.scale >> k.theta >> k.sigma_x >> k.sigma_y >> k.omega))
                throw DataError("malformed channel header: " + line);
            if (k.scale != 1 && k.scale != 2) throw DataError("channel scale must be 1 or 2");
        }

        // Kernel size is implied by the first row's pair count.
        std::vector<std::vector<cplx>> rows;
        int size = -1;
        while (size < 0 || static_cast<int>(rows.size()) < size) {
            if (!std::getline(in, line)) throw DataError("truncated kernel block");
            if (line.empty()) continue;
            std::istringstream rs(line);
            std::vector<cplx> row;
            std::string pair;
            while (rs >> pair) {
                double re = 0.0, im = 0.0;
                if (std::sscanf(pair.c_str(), "%lg,%lg", &re, &im) != 2)
                    throw DataError("malformed complex pair: " + pair);
                row.emplace_back(re, im);
            }
            if (size < 0) {
                size = static_cast<int>(row.size());
                if (size < 3 || size % 2 == 0) throw DataError("kernel size must be odd and at least 3");
            }
            if (static_cast<int>(row.size()) != size)
                throw DataError("ragged kernel row");
            rows.push_back(std::move(row));
        }

        k.values = ComplexGrid(size, size);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) k.values.at(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
        for (const cplx& v : k.values.data)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw DataError("non-finite kernel value");
        bank.push_back(std::move(k));
    }
    if (bank.empty()) throw DataError("empty bank file: " + path);
    return bank;
}

} // namespace amfm
