#include "anneal.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "fft.hpp"
#include "rng.hpp"

namespace amfm {

double objective_mse(const std::vector<double>& taps, const IdealResponse& ideal) {
    if (taps.empty()) throw ParamError("empty coefficient vector");
    if (static_cast<int>(taps.size()) > ideal.n_fft)
        throw ParamError("coefficient vector longer than the evaluation grid");
    const std::vector<double> mag = fft_magnitude(taps, ideal.n_fft);
    double acc = 0.0;
    for (size_t k = 0; k < mag.size(); ++k) {
        const double d = mag[k] - ideal.magnitude[k];
        acc += d * d;
    }
    return -acc / static_cast<double>(ideal.n_fft);
}

double default_sa_step(int bits) {
    if (bits < 1) throw ParamError("bit width must be positive");
    return (bits > 14) ? std::ldexp(1.0, -11) : std::ldexp(1.0, -bits);
}

SaResult sa_refine(const FirFilter& filter, const IdealResponse& ideal, const SaConfig& config) {
    if (!filter.format)
        throw ParamError("sa_refine needs a fixed-point filter");
    if (config.max_iterations < 1)
        throw ParamError("max_iterations must be at least 1");
    const double grid = filter.format->step;
    double step = (config.step == 0.0) ? default_sa_step(filter.format->bits) : config.step;
    if (!(step > 0.0))
        throw ParamError("step must be positive");
    const double ratio = step / grid;
    if (ratio < 1.0 || ratio != std::round(ratio))
        throw ParamError("step must be a positive integer multiple of the coefficient grid");

    const int n = filter.length();
    const double hi = 1.0 - step;
    std::vector<double> x = filter.taps;
    double fx = objective_mse(x, ideal);

    Rng rng(config.rng_seed);
    auto propose = [&](std::vector<double>& y) -> bool {
        // Returns false when the move leaves the representable range.
        const int i = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        const double s = rng.below(2) ? step : -step;
        y = x;
        const int j = n - 1 - i;
        if (i != j) {
            y[static_cast<size_t>(i)] += s;
            y[static_cast<size_t>(j)] -= s;
            if (y[static_cast<size_t>(i)] > hi || y[static_cast<size_t>(i)] < -1.0 ||
                y[static_cast<size_t>(j)] > hi || y[static_cast<size_t>(j)] < -1.0)
                return false;
        }
        return true;
    };

    // 1. Warm-up: scale C from the typical objective change of 100 probe moves.
    double c = config.c_exponent;
    if (c == 0.0) {
        std::vector<double> y;
        double sum = 0.0;
        int count = 0;
        for (int k = 0; k < 100; ++k) {
            if (!propose(y)) continue;
            const double d = std::abs(objective_mse(y, ideal) - fx);
            if (d > 0.0) {
                sum += d;
                ++count;
            }
        }
        const double power = (count > 0) ? std::floor(std::log10(sum / count)) : 0.0;
        c = std::pow(10.0, -power);
    }
    if (!(c > 0.0)) throw ParamError("c_exponent must be positive");

    // 2. Anneal; keep the best configuration ever accepted.
    SaResult result;
    result.c_used = c;
    result.step_used = step;
    std::vector<double> best = x;
    double fbest = fx;
    std::vector<double> y;
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        if (!propose(y)) continue;
        const double fy = objective_mse(y, ideal);
        bool take = fy >= fx;
        if (!take) {
            const double p = std::min(1.0, std::pow(1.0 + iter, (fy - fx) * c));
            take = rng.uniform() < p;
        }
        if (take) {
            x.swap(y);
            fx = fy;
            ++result.accepted;
            if (fx > fbest) {
                best = x;
                fbest = fx;
            }
        }
    }

    result.filter.taps = std::move(best);
    result.filter.format = filter.format;
    result.objective = fbest;
    return result;
}

} // namespace amfm
