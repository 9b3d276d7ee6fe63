#include "tm3/features.hpp"

#include <array>
#include <cmath>

#include "tm3/error.hpp"

namespace tm3 {

namespace {

double srgb_to_linear(double c)
{
    c /= 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t)
{
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

const Eigen::Matrix3d& srgb_to_xyz()
{
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,
                                      0.2126729, 0.7151522, 0.0721750,
                                      0.0193339, 0.1191920, 0.9503041)
                                         .finished();
    return m;
}

}  // namespace

PatchSet PatchSet::from_flat(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index dim)
{
    require(dim > 0 && v.size() % dim == 0, "PatchSet::from_flat: size not divisible by dim");
    PatchSet out;
    out.patches = Eigen::Map<const RowMatrixXd>(v.data(), v.size() / dim, dim);
    return out;
}

Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& rgb)
{
    // White point is the image of (255,255,255) so that white maps to a = b = 0.
    static const Eigen::Vector3d white = srgb_to_xyz().rowwise().sum();
    const Eigen::Vector3d lin(srgb_to_linear(rgb.x()), srgb_to_linear(rgb.y()), srgb_to_linear(rgb.z()));
    const Eigen::Vector3d xyz = srgb_to_xyz() * lin;
    const double fx = lab_f(xyz.x() / white.x());
    const double fy = lab_f(xyz.y() / white.y());
    const double fz = lab_f(xyz.z() / white.z());
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Eigen::Vector3d rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    return rgb_to_lab(Eigen::Vector3d(r, g, b));
}

Region region_to_lab(const Region& rgb)
{
    require(rgb.channels == 3, "region_to_lab: expected 3 channels");
    Region out(rgb.width, rgb.height, 3);
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            const Eigen::Vector3d lab = rgb_to_lab(Eigen::Vector3d(rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2)));
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = lab[c];
        }
    }
    return out;
}

Region image_to_lab(const Image& image)
{
    // 8-bit input: convert each distinct color once.
    Region out(image.width, image.height, 3);
    std::array<double, 256> lin{};
    for (int v = 0; v < 256; ++v) lin[v] = srgb_to_linear(v);
    static const Eigen::Vector3d white = srgb_to_xyz().rowwise().sum();
    for (std::size_t k = 0; k < image.rgb.size(); k += 3) {
        const Eigen::Vector3d xyz = srgb_to_xyz() * Eigen::Vector3d(lin[image.rgb[k]], lin[image.rgb[k + 1]], lin[image.rgb[k + 2]]);
        const double fx = lab_f(xyz.x() / white.x());
        const double fy = lab_f(xyz.y() / white.y());
        const double fz = lab_f(xyz.z() / white.z());
        out.data[k] = 116.0 * fy - 16.0;
        out.data[k + 1] = 500.0 * (fx - fy);
        out.data[k + 2] = 200.0 * (fy - fz);
    }
    return out;
}

PatchSet decompose_patches(const Region& region, int patch_side)
{
    require(patch_side > 0, "decompose_patches: patch side must be positive");
    require(region.width > 0 && region.height > 0, "decompose_patches: empty region");
    require(region.width % patch_side == 0 && region.height % patch_side == 0,
            "decompose_patches: region dimensions must be divisible by the patch side");
    const int gx = region.width / patch_side;
    const int gy = region.height / patch_side;
    const int dim = patch_side * patch_side * region.channels;

    PatchSet out;
    out.patches.resize(static_cast<Eigen::Index>(gx) * gy, dim);
    for (int py = 0; py < gy; ++py) {
        for (int px = 0; px < gx; ++px) {
            const Eigen::Index row = static_cast<Eigen::Index>(py) * gx + px;
            Eigen::Index col = 0;
            for (int dy = 0; dy < patch_side; ++dy)
                for (int dx = 0; dx < patch_side; ++dx)
                    for (int c = 0; c < region.channels; ++c)
                        out.patches(row, col++) = region.at(px * patch_side + dx, py * patch_side + dy, c);
        }
    }
    return out;
}

Region assemble_patches(const PatchSet& set, int width, int height, int channels, int patch_side)
{
    require(width % patch_side == 0 && height % patch_side == 0,
            "assemble_patches: dimensions must be divisible by the patch side");
    const int gx = width / patch_side;
    const int gy = height / patch_side;
    require(set.count() == static_cast<Eigen::Index>(gx) * gy &&
                set.dim() == static_cast<Eigen::Index>(patch_side) * patch_side * channels,
            "assemble_patches: patch set shape does not match the region");
    Region out(width, height, channels);
    for (int py = 0; py < gy; ++py) {
        for (int px = 0; px < gx; ++px) {
            const Eigen::Index row = static_cast<Eigen::Index>(py) * gx + px;
            Eigen::Index col = 0;
            for (int dy = 0; dy < patch_side; ++dy)
                for (int dx = 0; dx < patch_side; ++dx)
                    for (int c = 0; c < channels; ++c)
                        out.at(px * patch_side + dx, py * patch_side + dy, c) = set.patches(row, col++);
        }
    }
    return out;
}

std::vector<PatchSet> ColorFeatureProvider::extract(const Image& image, std::span<const TargetState> states,
                                                    const BaseSize& base) const
{
    std::vector<PatchSet> out;
    out.reserve(states.size());
    if (states.empty()) return out;
    // Converting the frame once is much cheaper than converting every crop;
    // crops are then interpolated in Lab.
    const Region lab = image_to_lab(image);
    for (const auto& s : states) out.push_back(decompose_patches(crop_normalize(lab, box_of(s, base))));
    return out;
}

std::vector<PatchSet> DeepFeatureProvider::extract(const Image&, std::span<const TargetState>,
                                                   const BaseSize&) const
{
    throw ValidationError("deep features are not available in this build; use the color provider");
}

}  // namespace tm3
