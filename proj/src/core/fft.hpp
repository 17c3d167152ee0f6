#pragma once
#include <complex>
#include <vector>

namespace amfm {

using cplx = std::complex<double>;

// Forward DFT (e^{-j...}). Radix-2 when n is a power of two, direct DFT
// otherwise (non-power sizes here are small test grids like 300).
std::vector<cplx> fft(const std::vector<cplx>& x);

// Forward DFT of a real signal zero-padded/truncated to n bins.
std::vector<cplx> fft_real(const std::vector<double>& x, std::size_t n);

std::vector<double> fft_magnitude(const std::vector<double>& x, std::size_t n);

// Forward 2D DFT of an h x w complex grid (row-major), output row-major h x w.
std::vector<cplx> fft2(const std::vector<cplx>& g, std::size_t h, std::size_t w);

} // namespace amfm
