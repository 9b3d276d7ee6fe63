#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "tm3/image.hpp"

namespace tm3 {

/// Axis-aligned box, 0-based pixel coordinates of the top-left corner.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;

    bool valid() const { return w > 0.0 && h > 0.0; }
    double area() const { return w * h; }
    Eigen::Vector2d center() const { return {x + 0.5 * w, y + 0.5 * h}; }
};

struct TargetState {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double scale = 1.0;
    std::int64_t frame_index = 0;
};

/// Size of the target at scale 1 (the first-frame box).
struct BaseSize {
    double w = 1.0;
    double h = 1.0;
};

struct SamplingParams {
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double sigma_s = 0.0;
    int n_samples = 1;
};

BoundingBox box_of(const TargetState& state, const BaseSize& base);
TargetState state_of(const BoundingBox& box, const BaseSize& base, std::int64_t frame_index = 0);

/// Intersection over union. Zero for disjoint boxes.
double vor(const BoundingBox& a, const BoundingBox& b);

/// Center location error (Euclidean distance between box centers).
double center_error(const BoundingBox& a, const BoundingBox& b);

/// Normalized translation-plus-scale distance between a candidate and a
/// reference state. `ref_w`, `ref_h` are the reference box dimensions and
/// `tau` weights the scale term.
double geometry_distance(const TargetState& cand, const TargetState& ref, double ref_w, double ref_h,
                         double tau);

/// Sampling spread used by the random-sampling flow: min(w/4, 15), min(h/4, 15), 0.15.
SamplingParams default_sampling(const BoundingBox& prev_box, int n_samples);

/// Gaussian samples around `prev` with diagonal covariance. Scales are clamped
/// to [0.5, 2] times the previous scale. Deterministic given the seed.
std::vector<TargetState> sample_candidates(const TargetState& prev, const SamplingParams& params,
                                           std::uint64_t rng_seed);

inline constexpr int kRegionSide = 36;

/// Crops `box` from the image and resamples it to side x side pixels with
/// bilinear interpolation. Pixels outside the frame replicate the border.
/// Output channels are RGB in [0,255].
Region crop_normalize(const Image& image, const BoundingBox& box, int side = kRegionSide);
/// Same sampling on an already converted 3-channel raster.
Region crop_normalize(const Region& image, const BoundingBox& box, int side = kRegionSide);

Region crop_normalize(const Image& image, const TargetState& state, const BaseSize& base,
                      int side = kRegionSide);

/// splitmix64 step, used to derive per-call seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tm3
