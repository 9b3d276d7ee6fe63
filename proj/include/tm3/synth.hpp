#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tm3/geometry.hpp"
#include "tm3/image.hpp"

namespace tm3 {

struct OcclusionWindow {
    int first = 0;          // first occluded frame
    int last = -1;          // last occluded frame, inclusive
    double coverage = 0.4;  // fraction of the target area hidden
};

struct SynthSpec {
    int width = 320;
    int height = 240;
    int frames = 100;
    double target_w = 40.0;
    double target_h = 40.0;
    double start_x = 60.0;  // top-left corner of the first box, 0-based
    double start_y = 50.0;
    double vx = 1.6;        // px per frame
    double vy = 1.2;
    double scale_amplitude = 0.0;  // relative size oscillation
    double scale_period = 40.0;
    std::vector<OcclusionWindow> occlusions;
    double brightness_drift = 0.0;  // total relative brightness change over the sequence
    double noise = 2.0;             // per-pixel Gaussian noise, grey levels
    int clutter = 12;               // distractor blobs in the background
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthSequence {
    std::vector<Image> frames;
    std::vector<BoundingBox> groundtruth;  // 0-based
    std::vector<int> target_pixels;        // pixels whose centers lie inside the box
    std::vector<int> occluded_pixels;      // target pixels covered by the occluder, per frame
};

/// Parses `key = value` lines; `#` starts a comment. Occlusions are given as
/// `occlusion = first,last,coverage` and may repeat.
SynthSpec parse_synth_spec(const std::string& text);

SynthSequence synth_sequence(const SynthSpec& spec);

/// Writes frames as img/0001.png ... and groundtruth_rect.txt.
void write_sequence(const SynthSequence& seq, const std::filesystem::path& dir);

}  // namespace tm3
