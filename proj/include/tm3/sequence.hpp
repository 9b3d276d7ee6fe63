#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tm3/geometry.hpp"

namespace tm3 {

/// A sequence in OTB layout: `img/` with numbered frames and
/// `groundtruth_rect.txt`. Boxes are stored 0-based.
struct SequenceBundle {
    std::string name;
    std::vector<std::filesystem::path> frames;
    std::vector<BoundingBox> groundtruth;
};

/// Parses one box per non-empty line; fields separated by commas, tabs or
/// spaces, 1-based pixel coordinates. Errors name the offending line.
std::vector<BoundingBox> parse_groundtruth(const std::string& text);

SequenceBundle load_sequence(const std::filesystem::path& dir);

/// 1-based "x,y,w,h" with fixed precision.
std::string format_box(const BoundingBox& box);

}  // namespace tm3
