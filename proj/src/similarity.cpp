#include "tm3/similarity.hpp"

namespace tm3 {

std::size_t argmax_first(std::span<const double> values)
{
    require(!values.empty(), "argmax_first: empty input");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] > values[best]) best = k;
    return best;
}

BatchScore batch_score(std::span<const PatchSet> candidates, const PatchSet& tmpl, const SimilarityConfig& cfg)
{
    require(!candidates.empty(), "batch_score: no candidates");
    BatchScore out;
    out.scores.reserve(candidates.size());
    for (const auto& c : candidates) out.scores.push_back(mbs(c, tmpl, cfg));
    out.best = argmax_first(out.scores);
    return out;
}

}  // namespace tm3
