#pragma once
#include <optional>
#include <string>
#include <vector>

namespace amfm {

struct FixedPointFormat {
    int bits = 0;       // fractional bits b
    double step = 0.0;  // 2^(-b)
};

// Anti-symmetric odd-length FIR (taps[k] == -taps[len-1-k], center tap 0).
struct FirFilter {
    std::vector<double> taps;
    std::optional<FixedPointFormat> format;

    int length() const { return static_cast<int>(taps.size()); }
    int delay() const { return (length() - 1) / 2; }
};

// Unit-passband magnitude target with linear 0->1 ramps of width transition*pi
// at omega=0 and omega=pi, symmetric about pi. Grid point k is omega=2*pi*k/n_fft.
struct IdealResponse {
    int n_fft = 0;
    double transition = 0.0;
    std::vector<double> magnitude;
};

struct PhaseReport {
    double max_residual = 0.0; // radians, vs best line fit over the interior 80%
    double fitted_delay = 0.0; // samples, -intercept/slope of that fit
};

IdealResponse ideal_hilbert_magnitude(int n_fft, double transition);

// Frequency-sampling inverse transform of the -j*sgn response (with ramped
// magnitude) followed by a Kaiser window of the tap length.
FirFilter design_hilbert_fir(int taps, double kaiser_beta, int n_fft, double transition);

// Full convolution truncated to the input length and aligned by the group
// delay (output[n] corresponds to input[n]); boundaries are zero padded.
std::vector<double> apply_fir(const std::vector<double>& signal, const FirFilter& filter);

// Round each tap to the nearest multiple of 2^(-bits), ties away from zero.
FirFilter quantize(const FirFilter& filter, int bits);

// Cosine probe at frequency u/n: phase of (input, filtered) as a complex pair,
// unwrapped and fit with a line over the interior 80% of samples.
PhaseReport linear_phase_report(const FirFilter& filter, int u, int n);

void save_filter(const FirFilter& filter, const std::string& path);
FirFilter load_filter(const std::string& path);

} // namespace amfm
