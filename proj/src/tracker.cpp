#include "tm3/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tm3/error.hpp"

namespace tm3 {

namespace {

constexpr std::size_t index_of(Cue c) { return static_cast<std::size_t>(c); }

bool intersects(const Image& image, const BoundingBox& b)
{
    return b.valid() && b.x < image.width && b.x + b.w > 0.0 && b.y < image.height && b.y + b.h > 0.0;
}

double template_score(const PatchSet& candidate, const PatchSet& tmpl, const SimilarityConfig& sim)
{
    if (tmpl.count() == 0) return 0.0;
    return mbs_normalized(candidate, tmpl, sim);
}

}  // namespace

void TrackerConfig::validate() const
{
    require(n_r >= 1 && n_r_refined >= 1 && n_e_refined >= 1 && n_proposals >= 1, "config: counts must be >= 1");
    require(n_d >= 1 && n_s >= 2 && k_codebook >= 1 && filter_interval >= 1, "config: counts must be >= 1");
    require(sigma1 > 0.0 && sigma2 > 0.0, "config: kernel widths must be positive");
    require(cap_c >= 1, "config: cap_c must be >= 1");
    require(beta >= 0.0 && delta >= 0.0 && tau >= 0.0, "config: weights must be non-negative");
    require(tmpl_e_threshold >= 0.0 && tmpl_e_threshold <= 1.0, "config: tmpl_e_threshold must be in [0, 1]");
    require(sigma_s >= 0.0 && sigma_xy_cap >= 0.0, "config: sampling spreads must be non-negative");
    require(flow_r || flow_e, "config: at least one flow must be enabled");
}

const char* cue_name(Cue cue)
{
    switch (cue) {
    case Cue::flow_r: return "flow_r";
    case Cue::flow_e_mbs: return "flow_e_mbs";
    case Cue::flow_e_dist: return "flow_e_dist";
    }
    return "unknown";
}

std::vector<std::size_t> fast_select_r(std::span<const PatchSet> candidates, const PatchSet& reference,
                                       std::size_t n_keep)
{
    std::vector<Neighbor> d;
    d.reserve(candidates.size());
    const auto ref = reference.flat();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        require(candidates[k].patches.size() == ref.size(), "fast_select_r: feature size mismatch");
        d.push_back({squared_distance(candidates[k].flat(), ref), static_cast<Eigen::Index>(k)});
    }
    const std::size_t keep = std::min(n_keep, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(keep), d.end());
    std::vector<std::size_t> out(keep);
    for (std::size_t k = 0; k < keep; ++k) out[k] = static_cast<std::size_t>(d[k].index);
    return out;
}

GeometrySelection fast_select_e(std::span<const TargetState> proposals, const TargetState& anchor,
                                std::size_t n_keep, double tau, double ref_w, double ref_h)
{
    require(!proposals.empty(), "fast_select_e: no proposals");
    GeometrySelection out;
    std::vector<Neighbor> d;
    for (std::size_t k = 0; k < proposals.size(); ++k) {
        const double dist = geometry_distance(proposals[k], anchor, ref_w, ref_h, tau);
        out.distances.push_back(dist);
        d.push_back({dist, static_cast<Eigen::Index>(k)});
    }
    const std::size_t keep = std::min(n_keep, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(keep), d.end());
    for (std::size_t k = 0; k < keep; ++k) out.kept.push_back(static_cast<std::size_t>(d[k].index));
    out.nearest = out.kept.empty() ? 0 : out.kept.front();
    return out;
}

FusionResult fuse_cues(std::span<const CueCandidate> cues, const TemplatePair& templates,
                       const SimilarityConfig& sim)
{
    require(!cues.empty(), "fuse_cues: no cues");
    FusionResult out;
    out.confidence.fill(std::numeric_limits<double>::quiet_NaN());
    for (const auto& c : cues) {
        require(c.patches != nullptr, "fuse_cues: cue without features");
        double f = template_score(*c.patches, templates.tmpl_r, sim) + template_score(*c.patches, templates.tmpl_e, sim);
        for (const auto& other : cues)
            if (other.cue != c.cue) f += vor(c.box, other.box);
        out.confidence[index_of(c.cue)] = f;
        out.available[index_of(c.cue)] = true;
    }
    bool have = false;
    for (const Cue c : {Cue::flow_r, Cue::flow_e_mbs, Cue::flow_e_dist}) {
        const std::size_t k = index_of(c);
        if (!out.available[k]) continue;
        if (!have || out.confidence[k] > out.confidence[index_of(out.winner)]) {
            out.winner = c;
            have = true;
        }
    }
    return out;
}

Tracker::Tracker(TrackerConfig cfg, std::shared_ptr<const FeatureProvider> features,
                 std::shared_ptr<const ProposalProvider> proposals)
    : cfg_(cfg), sim_{cfg.sigma1, cfg.cap_c}, features_(std::move(features)), proposals_(std::move(proposals)),
      dict_(static_cast<std::size_t>(std::max(cfg.n_d, 1)))
{
    cfg_.validate();
    if (!features_) features_ = std::make_shared<ColorFeatureProvider>();
    if (!proposals_) proposals_ = std::make_shared<EdgeGridProposals>();
}

void Tracker::initialize(const Image& image, const BoundingBox& box)
{
    require(box.valid(), "Tracker::initialize: invalid box");
    require(intersects(image, box), "Tracker::initialize: box outside the image");
    base_ = {box.w, box.h};
    state_ = state_of(box, base_, 0);
    state_.scale = 1.0;
    frame_ = 0;

    const TargetState init[] = {state_};
    last_result_ = features_->extract(image, init, base_).front();
    // Single-flow ablations keep only the long-memory template.
    templates_ = {last_result_, cfg_.flow_e && cfg_.flow_r ? last_result_ : PatchSet{}};
    dict_ = TemplateDictionary(static_cast<std::size_t>(cfg_.n_d));
    dict_.push(last_result_.flat());
    history_.clear();
    history_.push_back(last_result_);
    initialized_ = true;
}

FrameResult Tracker::track(const Image& image)
{
    require(initialized_, "Tracker::track: call initialize() first");
    ++frame_;
    const TargetState prev = state_;
    const BoundingBox prev_box = box_of(prev, base_);

    std::vector<CueCandidate> cues;
    std::vector<PatchSet> r_feats, e_feats;
    PatchSet dist_feat;

    // Random-sampling flow.
    TargetState anchor = prev;
    if (cfg_.flow_r) {
        SamplingParams sp{std::min(prev_box.w / 4.0, cfg_.sigma_xy_cap), std::min(prev_box.h / 4.0, cfg_.sigma_xy_cap),
                          cfg_.sigma_s, cfg_.n_r};
        std::vector<TargetState> samples =
            sample_candidates(prev, sp, mix_seed(cfg_.seed, static_cast<std::uint64_t>(frame_)));
        std::erase_if(samples, [&](const TargetState& s) { return !intersects(image, box_of(s, base_)); });
        if (!samples.empty()) {
            r_feats = features_->extract(image, samples, base_);
            const auto kept = fast_select_r(r_feats, last_result_, static_cast<std::size_t>(cfg_.n_r_refined));
            std::vector<PatchSet> refined;
            refined.reserve(kept.size());
            for (const auto k : kept) refined.push_back(r_feats[k]);
            const BatchScore scored = batch_score(refined, templates_.tmpl_r, sim_);
            const std::size_t best = kept[scored.best];
            anchor = samples[best];
            cues.push_back({Cue::flow_r, samples[best], box_of(samples[best], base_), &r_feats[best]});
        }
    }

    // Proposal flow.
    std::vector<TargetState> kept_props;
    if (cfg_.flow_e) {
        std::vector<TargetState> props;
        for (const auto& p : proposals_->propose(image, prev, base_, cfg_.n_proposals))
            if (p.objectness > 0.0 && intersects(image, box_of(p.state, base_))) props.push_back(p.state);
        if (!props.empty()) {
            const GeometrySelection sel = fast_select_e(props, anchor, static_cast<std::size_t>(cfg_.n_e_refined),
                                                        cfg_.tau, prev_box.w, prev_box.h);
            for (const auto k : sel.kept) kept_props.push_back(props[k]);
            e_feats = features_->extract(image, kept_props, base_);
            const PatchSet& e_tmpl = templates_.tmpl_e.count() > 0 ? templates_.tmpl_e : templates_.tmpl_r;
            const BatchScore scored = batch_score(e_feats, e_tmpl, sim_);
            // kept[0] is the geometry argmin.
            cues.push_back({Cue::flow_e_mbs, kept_props[scored.best], box_of(kept_props[scored.best], base_),
                            &e_feats[scored.best]});
            cues.push_back({Cue::flow_e_dist, kept_props.front(), box_of(kept_props.front(), base_), &e_feats.front()});
        }
    }

    FrameResult res;
    res.scores.fill(std::numeric_limits<double>::quiet_NaN());
    if (cues.empty()) {
        res.state = prev;
        res.state.frame_index = frame_;
        res.box = prev_box;
        res.confidence = 0.0;
        res.lost = true;
        state_.frame_index = frame_;
        return res;
    }

    const FusionResult fused = fuse_cues(cues, templates_, sim_);
    const auto win = std::find_if(cues.begin(), cues.end(), [&](const CueCandidate& c) { return c.cue == fused.winner; });
    const PatchSet result = *win->patches;

    res.state = win->state;
    res.state.frame_index = frame_;
    res.box = win->box;
    res.cue_origin = fused.winner;
    res.scores = fused.confidence;
    res.available = fused.available;
    res.confidence = fused.confidence[index_of(fused.winner)];

    // Short-memory template.
    if (templates_.tmpl_e.count() > 0) {
        const double score = template_score(result, templates_.tmpl_e, sim_);
        const TemplateEUpdate upd = maybe_update_template_e(templates_, result, score, cfg_.tmpl_e_threshold);
        templates_ = upd.templates;
        res.tmpl_e_updated = upd.replaced;
    }

    if (!cfg_.memory_filtering) {
        // Without memory filtering the long-memory template follows the same rule as the short one.
        if (template_score(result, templates_.tmpl_r, sim_) > cfg_.tmpl_e_threshold) {
            templates_.tmpl_r = result;
            res.tmpl_r_updated = true;
        }
    }

    history_.push_back(result);
    while (history_.size() > static_cast<std::size_t>(cfg_.n_s)) history_.pop_front();

    if (cfg_.memory_filtering && frame_ % cfg_.filter_interval == 0 && history_.size() >= 2) {
        run_memory_filter(result);
        res.tmpl_r_updated = true;
    }

    state_ = res.state;
    last_result_ = result;
    return res;
}

void Tracker::run_memory_filter(const PatchSet& result)
{
    const auto n = static_cast<Eigen::Index>(history_.size());
    const Eigen::Index d = history_.front().patches.size();
    SelectionProblem prob;
    prob.X.resize(d, n);
    prob.h.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const PatchSet& r = history_[static_cast<std::size_t>(i)];
        prob.X.col(i) = r.flat();
        prob.h(i) = template_score(r, templates_.tmpl_r, sim_);
    }
    scale_selection_columns(prob.X);
    prob.beta = cfg_.beta;
    prob.delta = cfg_.delta;
    prob.sigma2 = cfg_.sigma2;
    prob.cap_c = cfg_.cap_c;
    const SelectionSolution sol = solve_selection(prob);
    dict_.push(history_[static_cast<std::size_t>(sol.selected_index)].flat());

    const Eigen::Index trivial = cfg_.trivial_count < 0 ? d : static_cast<Eigen::Index>(cfg_.trivial_count);
    const Reconstruction rec = reconstruct_template_r(result.flat(), dict_, cfg_.k_codebook, trivial);
    if (!rec.atoms_used.empty())
        templates_.tmpl_r = PatchSet::from_flat(rec.template_vector, result.dim());
}

std::vector<FrameResult> track_sequence(const std::vector<Image>& frames, const BoundingBox& init,
                                        const TrackerConfig& cfg)
{
    require(!frames.empty(), "track_sequence: no frames");
    Tracker tracker(cfg);
    tracker.initialize(frames.front(), init);
    std::vector<FrameResult> out;
    FrameResult first;
    first.state = tracker.state();
    first.box = init;
    first.confidence = 0.0;
    out.push_back(first);
    for (std::size_t k = 1; k < frames.size(); ++k) out.push_back(tracker.track(frames[k]));
    return out;
}

}  // namespace tm3
