#include "tm3/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tm3/error.hpp"

namespace tm3 {

BoundingBox box_of(const TargetState& state, const BaseSize& base)
{
    const double w = state.scale * base.w;
    const double h = state.scale * base.h;
    return {state.center.x() - 0.5 * w, state.center.y() - 0.5 * h, w, h};
}

TargetState state_of(const BoundingBox& box, const BaseSize& base, std::int64_t frame_index)
{
    TargetState s;
    s.center = box.center();
    s.scale = std::sqrt((box.w * box.h) / (base.w * base.h));
    s.frame_index = frame_index;
    return s;
}

double vor(const BoundingBox& a, const BoundingBox& b)
{
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

double center_error(const BoundingBox& a, const BoundingBox& b)
{
    return (a.center() - b.center()).norm();
}

double geometry_distance(const TargetState& cand, const TargetState& ref, double ref_w, double ref_h,
                         double tau)
{
    const double ssum = ref.scale + cand.scale;
    require(ssum > 0.0, "geometry_distance: scale sum must be positive");
    require(ref_w > 0.0 && ref_h > 0.0, "geometry_distance: reference box must have positive size");
    const Eigen::Vector3d v((ref.center.x() - cand.center.x()) / (ref_w * ssum),
                            (ref.center.y() - cand.center.y()) / (ref_h * ssum),
                            tau * (ref.scale - cand.scale) / ssum);
    return v.norm();
}

SamplingParams default_sampling(const BoundingBox& prev_box, int n_samples)
{
    return {std::min(prev_box.w / 4.0, 15.0), std::min(prev_box.h / 4.0, 15.0), 0.15, n_samples};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<TargetState> sample_candidates(const TargetState& prev, const SamplingParams& params,
                                           std::uint64_t rng_seed)
{
    require(params.n_samples >= 1, "sample_candidates: n_samples must be >= 1");
    require(params.sigma_x >= 0.0 && params.sigma_y >= 0.0 && params.sigma_s >= 0.0,
            "sample_candidates: sigmas must be non-negative");
    require(prev.scale > 0.0, "sample_candidates: previous scale must be positive");

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<TargetState> out(static_cast<std::size_t>(params.n_samples), prev);
    for (auto& s : out) {
        const double zx = normal(rng);
        const double zy = normal(rng);
        const double zs = normal(rng);
        s.center.x() += params.sigma_x * zx;
        s.center.y() += params.sigma_y * zy;
        s.scale = std::clamp(prev.scale + params.sigma_s * zs, 0.5 * prev.scale, 2.0 * prev.scale);
    }
    return out;
}

namespace {

template <typename Raster>
Region crop_bilinear(const Raster& image, const BoundingBox& box, int side)
{
    require(image.width > 0 && image.height > 0, "crop_normalize: empty image");
    require(box.valid(), "crop_normalize: invalid box");
    require(side > 0, "crop_normalize: output side must be positive");
    const bool intersects = box.x < image.width && box.x + box.w > 0.0 && box.y < image.height &&
                            box.y + box.h > 0.0;
    require(intersects, "crop_normalize: box does not intersect the image");

    Region out(side, side, 3);
    const double step_x = box.w / side;
    const double step_y = box.h / side;
    const int max_x = image.width - 1;
    const int max_y = image.height - 1;
    for (int v = 0; v < side; ++v) {
        const double sy = box.y + (v + 0.5) * step_y - 0.5;
        const double fy = std::floor(sy);
        const double wy = sy - fy;
        const int y0 = std::clamp(static_cast<int>(fy), 0, max_y);
        const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, max_y);
        for (int u = 0; u < side; ++u) {
            const double sx = box.x + (u + 0.5) * step_x - 0.5;
            const double fx = std::floor(sx);
            const double wx = sx - fx;
            const int x0 = std::clamp(static_cast<int>(fx), 0, max_x);
            const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, max_x);
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * static_cast<double>(image.at(x0, y0, c)) + wx * image.at(x1, y0, c);
                const double bottom = (1.0 - wx) * image.at(x0, y1, c) + wx * image.at(x1, y1, c);
                out.at(u, v, c) = (1.0 - wy) * top + wy * bottom;
            }
        }
    }
    return out;
}

}  // namespace

Region crop_normalize(const Image& image, const BoundingBox& box, int side) { return crop_bilinear(image, box, side); }

Region crop_normalize(const Region& image, const BoundingBox& box, int side)
{
    require(image.channels == 3, "crop_normalize: expected 3 channels");
    return crop_bilinear(image, box, side);
}

Region crop_normalize(const Image& image, const TargetState& state, const BaseSize& base, int side)
{
    return crop_normalize(image, box_of(state, base), side);
}

}  // namespace tm3
