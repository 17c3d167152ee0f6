#pragma once
#include <vector>

#include "fir.hpp"
#include "gabor.hpp"
#include "grid.hpp"

namespace amfm {

struct AnalyticImage {
    Grid re; // source intensities
    Grid im; // row-wise Hilbert response, group-delay aligned
};

struct AmFmDecomposition {
    Grid ia;             // dominant amplitude, >= 0
    Grid ip;             // dominant phase, in (-pi, pi]
    Grid fm;             // cos(ip), in [-1, 1]
    GridT<int> channel;  // dominant channel index
};

struct IfField {
    Grid dpsi_dx; // radians/sample
    Grid dpsi_dy;
};

// re = input; im[r] = apply_fir(row r). The image must be at least as wide
// as the filter.
AnalyticImage analytic_image(const Grid& gray, const FirFilter& filter);

// Zero-padded same-size spatial filtering of re + j*im; a centered unit
// impulse reproduces the kernel flipped about its center.
ComplexGrid channel_filter(const AnalyticImage& img, const GaborKernel& kernel);

// Dominant component per pixel: channel = argmax |response| (ties -> lowest
// index), ia = that modulus, ip = atan2(Im, Re), fm = cos(ip).
AmFmDecomposition dca(const std::vector<ComplexGrid>& responses);

// Phase gradient with wrap-aware differences mapped to (-pi, pi]: central on
// the interior (mean of the two one-step wrapped differences), one-sided at
// borders.
IfField instantaneous_frequency(const Grid& ip);

// analytic_image -> channel_filter over the whole bank -> dca.
AmFmDecomposition demodulate(const Grid& gray, const FirFilter& filter, const KernelBank& bank,
                             int threads = 1);

} // namespace amfm
