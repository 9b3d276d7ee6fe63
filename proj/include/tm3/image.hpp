#pragma once

#include <cstdint>
#include <vector>

namespace tm3 {

/// 8-bit interleaved RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }

    std::uint8_t& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Floating point raster with interleaved channels, row-major.
/// Used for normalized crops (RGB in [0,255] or Lab).
struct Region {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;

    Region() = default;
    Region(int w, int h, int c = 3, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

}  // namespace tm3
