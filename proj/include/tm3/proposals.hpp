#pragma once

#include <vector>

#include "tm3/geometry.hpp"
#include "tm3/image.hpp"

namespace tm3 {

struct Proposal {
    TargetState state;
    double objectness = 0.0;
};

/// Source of object proposals for the proposal flow.
class ProposalProvider {
public:
    virtual ~ProposalProvider() = default;

    /// At most n proposals with positive box area, best first.
    virtual std::vector<Proposal> propose(const Image& image, const TargetState& prev, const BaseSize& base,
                                          int n) const = 0;
};

/// Multi-scale sliding grid around the previous state, scored by the mean
/// Sobel gradient magnitude inside each box. `stride` is a fraction of the
/// box side; the grid spans `radius` strides on each side of the previous
/// center. The default covers one box side each way at 1/8-side spacing.
class EdgeGridProposals final : public ProposalProvider {
public:
    explicit EdgeGridProposals(int radius = 8, std::vector<double> scales = {0.9, 1.0, 1.1}, double stride = 0.125);

    std::vector<Proposal> propose(const Image& image, const TargetState& prev, const BaseSize& base,
                                  int n) const override;

    /// Grid before scoring, in grid order (scale, row, column).
    std::vector<TargetState> grid(const TargetState& prev, const BaseSize& base) const;

private:
    int radius_;
    double stride_;  // fraction of the box side
    std::vector<double> scales_;
};

/// Sobel gradient magnitude of the luma channel.
std::vector<double> sobel_magnitude(const Image& image);

}  // namespace tm3
