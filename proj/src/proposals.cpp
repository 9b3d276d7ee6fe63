#include "tm3/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tm3/error.hpp"

namespace tm3 {

namespace {

// Summed-area table with a zero row and column in front.
class IntegralImage {
public:
    IntegralImage(const std::vector<double>& values, int width, int height)
        : w_(width + 1), sums_(static_cast<std::size_t>(width + 1) * (height + 1), 0.0)
    {
        for (int y = 0; y < height; ++y) {
            double row = 0.0;
            for (int x = 0; x < width; ++x) {
                row += values[static_cast<std::size_t>(y) * width + x];
                at(x + 1, y + 1) = at(x + 1, y) + row;
            }
        }
    }

    // Sum over [x0, x1) x [y0, y1).
    double sum(int x0, int y0, int x1, int y1) const { return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0); }

private:
    double& at(int x, int y) { return sums_[static_cast<std::size_t>(y) * w_ + x]; }
    double at(int x, int y) const { return sums_[static_cast<std::size_t>(y) * w_ + x]; }

    int w_;
    std::vector<double> sums_;
};

}  // namespace

std::vector<double> sobel_magnitude(const Image& image)
{
    const int w = image.width, h = image.height;
    std::vector<double> luma(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            luma[static_cast<std::size_t>(y) * w + x] =
                0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);

    const auto px = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return luma[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<double> mag(luma.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            mag[static_cast<std::size_t>(y) * w + x] = std::hypot(gx, gy);
        }
    }
    return mag;
}

EdgeGridProposals::EdgeGridProposals(int radius, std::vector<double> scales, double stride)
    : radius_(radius), stride_(stride), scales_(std::move(scales))
{
    require(radius_ >= 0, "EdgeGridProposals: radius must be non-negative");
    require(!scales_.empty(), "EdgeGridProposals: need at least one scale");
    require(stride_ > 0.0, "EdgeGridProposals: stride must be positive");
}

std::vector<TargetState> EdgeGridProposals::grid(const TargetState& prev, const BaseSize& base) const
{
    std::vector<TargetState> out;
    for (const double factor : scales_) {
        const double s = prev.scale * factor;
        const double sx = stride_ * s * base.w;
        const double sy = stride_ * s * base.h;
        for (int j = -radius_; j <= radius_; ++j) {
            for (int i = -radius_; i <= radius_; ++i) {
                TargetState st = prev;
                st.scale = s;
                st.center += Eigen::Vector2d(i * sx, j * sy);
                out.push_back(st);
            }
        }
    }
    return out;
}

std::vector<Proposal> EdgeGridProposals::propose(const Image& image, const TargetState& prev, const BaseSize& base,
                                                 int n) const
{
    require(!image.empty(), "EdgeGridProposals: empty image");
    require(n >= 0, "EdgeGridProposals: n must be non-negative");
    const IntegralImage edges(sobel_magnitude(image), image.width, image.height);

    std::vector<Proposal> out;
    for (const auto& st : grid(prev, base)) {
        const BoundingBox b = box_of(st, base);
        if (!b.valid()) continue;
        const int x0 = std::clamp(static_cast<int>(std::lround(b.x)), 0, image.width);
        const int y0 = std::clamp(static_cast<int>(std::lround(b.y)), 0, image.height);
        const int x1 = std::clamp(static_cast<int>(std::lround(b.x + b.w)), 0, image.width);
        const int y1 = std::clamp(static_cast<int>(std::lround(b.y + b.h)), 0, image.height);
        double score = 0.0;
        if (x1 > x0 && y1 > y0)
            score = edges.sum(x0, y0, x1, y1) / (static_cast<double>(x1 - x0) * (y1 - y0));
        out.push_back({st, score});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Proposal& a, const Proposal& b) { return a.objectness > b.objectness; });
    if (out.size() > static_cast<std::size_t>(n)) out.resize(static_cast<std::size_t>(n));
    return out;
}

}  // namespace tm3
