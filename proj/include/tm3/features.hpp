#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tm3/geometry.hpp"
#include "tm3/image.hpp"

namespace tm3 {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A region decomposed into fixed-size feature vectors, one row per patch.
struct PatchSet {
    RowMatrixXd patches;

    Eigen::Index count() const { return patches.rows(); }
    Eigen::Index dim() const { return patches.cols(); }

    /// Row-major concatenation of all patch vectors.
    Eigen::Map<const Eigen::VectorXd> flat() const { return {patches.data(), patches.size()}; }

    static PatchSet from_flat(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index dim);
};

inline constexpr int kPatchSide = 3;

/// sRGB (D65, 2 degree observer) to CIELAB. Channels in [0,255].
Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& rgb);
Eigen::Vector3d rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Converts every pixel of an RGB region to Lab.
Region region_to_lab(const Region& rgb);
Region image_to_lab(const Image& image);

/// Splits a region into non-overlapping patch_side x patch_side patches.
/// Patches are ordered row-major over the patch grid; within a patch the
/// pixels are row-major with channels interleaved.
PatchSet decompose_patches(const Region& region, int patch_side = kPatchSide);

/// Inverse of decompose_patches.
Region assemble_patches(const PatchSet& set, int width, int height, int channels = 3,
                        int patch_side = kPatchSide);

/// Turns image regions into patch sets.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;

    virtual std::vector<PatchSet> extract(const Image& image, std::span<const TargetState> states,
                                          const BaseSize& base) const = 0;
    virtual Eigen::Index dim() const = 0;
};

/// 36x36 Lab crops split into 144 patches of 27 values.
class ColorFeatureProvider final : public FeatureProvider {
public:
    std::vector<PatchSet> extract(const Image& image, std::span<const TargetState> states,
                                  const BaseSize& base) const override;
    Eigen::Index dim() const override { return kPatchSide * kPatchSide * 3; }
};

/// ROI-pooled 4096-d CNN descriptor. Declared for interface completeness;
/// extract() throws because no network backend ships with this library.
class DeepFeatureProvider final : public FeatureProvider {
public:
    std::vector<PatchSet> extract(const Image& image, std::span<const TargetState> states,
                                  const BaseSize& base) const override;
    Eigen::Index dim() const override { return 4096; }
};

}  // namespace tm3
