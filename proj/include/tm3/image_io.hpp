#pragma once

#include <filesystem>

#include "tm3/image.hpp"

namespace tm3 {

/// Reads a PNG or JPEG file (detected from the file signature) as RGB8.
/// Grayscale and alpha inputs are converted. Throws IoError.
Image read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace tm3
