#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tm3/features.hpp"
#include "tm3/geometry.hpp"
#include "tm3/memory_filter.hpp"
#include "tm3/proposals.hpp"
#include "tm3/similarity.hpp"

namespace tm3 {

struct TrackerConfig {
    int n_r = 700;            // random samples per frame
    int n_r_refined = 50;     // samples kept by the feature-space preselection
    int n_e_refined = 50;     // proposals kept by the geometry preselection
    int n_proposals = 200;    // proposals requested per frame
    double tau = 5.0;         // scale weight of the geometry distance
    double sigma1 = 0.5;      // pair-score kernel width
    int cap_c = 4;            // neighbor-rank cap
    double sigma2 = 2.0;      // weight-matrix kernel width
    double beta = 10.0;       // group sparsity weight
    double delta = 5.0;       // graph smoothing weight
    int n_d = 12;             // dictionary capacity
    int n_s = 10;             // results per selection problem
    int k_codebook = 5;       // codebook atoms used for the long-memory template
    std::int64_t trivial_count = -1;  // unit vectors admitted to the codebook; -1 means all
    double tmpl_e_threshold = 0.5;
    int filter_interval = 10;  // frames between memory-filtering rounds
    double sigma_s = 0.15;
    double sigma_xy_cap = 15.0;
    std::uint64_t seed = 0;

    bool flow_r = true;
    bool flow_e = true;
    bool memory_filtering = true;

    void validate() const;
};

enum class Cue { flow_r, flow_e_mbs, flow_e_dist };

const char* cue_name(Cue cue);

struct FrameResult {
    TargetState state;
    BoundingBox box;
    double confidence = 0.0;
    Cue cue_origin = Cue::flow_r;
    std::array<double, 3> scores{};       // fused confidence per cue; NaN when the cue is absent
    std::array<bool, 3> available{};
    bool lost = false;
    bool tmpl_e_updated = false;
    bool tmpl_r_updated = false;
};

/// Exactly the n_keep candidates closest to `reference` in flattened feature
/// space, ascending distance, ties by index.
std::vector<std::size_t> fast_select_r(std::span<const PatchSet> candidates, const PatchSet& reference,
                                       std::size_t n_keep);

struct GeometrySelection {
    std::vector<std::size_t> kept;  // ascending distance, ties by index
    std::vector<double> distances;  // distance of every input proposal
    std::size_t nearest = 0;        // argmin over all proposals
};

GeometrySelection fast_select_e(std::span<const TargetState> proposals, const TargetState& anchor,
                                std::size_t n_keep, double tau, double ref_w, double ref_h);

/// One tracking cue entering the fusion step.
struct CueCandidate {
    Cue cue = Cue::flow_r;
    TargetState state;
    BoundingBox box;
    const PatchSet* patches = nullptr;
};

struct FusionResult {
    std::array<double, 3> confidence{};
    std::array<bool, 3> available{};
    Cue winner = Cue::flow_r;
};

/// Confidence of each cue: its normalized MBS against both templates plus its
/// overlap with every other available cue. Highest wins; ties prefer flow_r,
/// then flow_e_mbs. Templates with zero patches contribute nothing.
FusionResult fuse_cues(std::span<const CueCandidate> cues, const TemplatePair& templates,
                       const SimilarityConfig& sim);

/// The dual-flow template-matching tracker. One instance per sequence.
class Tracker {
public:
    Tracker(TrackerConfig cfg, std::shared_ptr<const FeatureProvider> features = nullptr,
            std::shared_ptr<const ProposalProvider> proposals = nullptr);

    /// Builds both templates and seeds the dictionary from the first-frame box.
    void initialize(const Image& image, const BoundingBox& box);

    FrameResult track(const Image& image);

    const TrackerConfig& config() const { return cfg_; }
    const TemplatePair& templates() const { return templates_; }
    const TemplateDictionary& dictionary() const { return dict_; }
    const TargetState& state() const { return state_; }
    const BaseSize& base_size() const { return base_; }
    bool initialized() const { return initialized_; }

private:
    void run_memory_filter(const PatchSet& result);

    TrackerConfig cfg_;
    SimilarityConfig sim_;
    std::shared_ptr<const FeatureProvider> features_;
    std::shared_ptr<const ProposalProvider> proposals_;

    bool initialized_ = false;
    BaseSize base_;
    TargetState state_;
    PatchSet last_result_;
    TemplatePair templates_;
    TemplateDictionary dict_;
    std::deque<PatchSet> history_;
    std::int64_t frame_ = 0;
};

/// Runs a tracker over a whole sequence: the first box initializes, every
/// following frame is tracked. The first returned entry is the initial box.
std::vector<FrameResult> track_sequence(const std::vector<Image>& frames, const BoundingBox& init,
                                        const TrackerConfig& cfg);

}  // namespace tm3
