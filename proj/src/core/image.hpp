#pragma once
#include <string>

#include "grid.hpp"

namespace amfm {

// Reads P2/P3/P5/P6 with maxval up to 65535. Color is converted to luma
// (0.299R + 0.587G + 0.114B); samples are rescaled to the [0,255] range.
Grid load_image(const std::string& path);

// 8-bit binary PGM; values are clamped to [0,255] and rounded.
void save_pgm(const Grid& img, const std::string& path);

// 8-bit binary PPM from three equally sized planes.
void save_ppm(const Grid& r, const Grid& g, const Grid& b, const std::string& path);

// Affine rescale of an arbitrary map onto [0,255] (constant maps go to 0).
Grid rescale_for_export(const Grid& img);

} // namespace amfm
