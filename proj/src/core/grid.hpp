#pragma once
#include <complex>
#include <cstddef>
#include <vector>

namespace amfm {

// Row-major 2D array; the shared pixel/coefficient container.
template <typename T>
struct GridT {
    int h = 0;
    int w = 0;
    std::vector<T> data;

    GridT() = default;
    GridT(int height, int width, T fill = T{})
        : h(height), w(width), data(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill) {}

    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)]; }
    const T& at(int r, int c) const {
        return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)];
    }
    std::size_t size() const { return data.size(); }
    bool inside(int r, int c) const { return r >= 0 && r < h && c >= 0 && c < w; }
};

using Grid = GridT<double>;
using ComplexGrid = GridT<std::complex<double>>;

} // namespace amfm
