#pragma once
#include <string>
#include <vector>

#include "grid.hpp"

namespace amfm {

struct GaborKernel {
    ComplexGrid values;      // size x size
    double theta = 0.0;      // radians
    double sigma_x = 0.0;    // pixels
    double sigma_y = 0.0;    // pixels
    double omega = 0.0;      // radians/sample; 0 for scale 1
    int scale = 1;           // 1 = directional Gaussian, 2 = frequency-shifted
    double lambda_norm = 1.0;
};

struct BankConfig {
    int orientations = 8;
    double theta_step = 0.39;    // radians between orientations
    double scale2_theta0 = 0.19; // radians, scale-2 starting angle
    double omega = 1.5707963267948966; // pi/2 radians/sample
    int kernel_size = 11;
    double sigma_x = 1.5;
    double sigma_y = 0.375;
};

using KernelBank = std::vector<GaborKernel>;

struct ChannelReport {
    double peak_fy = 0.0; // radians/sample, signed, row axis
    double peak_fx = 0.0;
    double peak_magnitude = 0.0;
    double dc_gain = 0.0;
};

// Real nonnegative unit-sum kernel exp(-(a x^2 + 2 b x y + c y^2)) on integer
// offsets, with the standard rotated quadratic form for (a, b, c).
GaborKernel rotated_gaussian_kernel(double theta, double sigma_x, double sigma_y, int size);

// Same envelope modulated to frequency omega along theta, with the envelope's
// DC leakage cancelled exactly, then normalized to unit absolute sum.
GaborKernel gabor_kernel(double theta, double sigma_x, double sigma_y, double omega, int size);

// Channels 0..orientations-1: scale 1 at theta = k*theta_step.
// Channels orientations..2*orientations-1: scale 2 at scale2_theta0 + k*theta_step.
KernelBank build_bank(const BankConfig& config);

// Zero-padded 2D FFT peak and DC gain per channel.
std::vector<ChannelReport> bank_frequency_report(const KernelBank& bank, int n_fft);

void save_bank(const KernelBank& bank, const std::string& path);
KernelBank load_bank(const std::string& path);

} // namespace amfm
