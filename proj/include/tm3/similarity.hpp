#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tm3/error.hpp"
#include "tm3/features.hpp"

namespace tm3 {

struct SimilarityConfig {
    double sigma1 = 0.5;  // kernel width of the pair score
    int cap_c = 4;        // largest neighbor rank that still counts
};

/// q_j is the r-th nearest neighbor of p_i in Q and p_i is the s-th nearest
/// neighbor of q_j in P. Ranks are 1-based.
struct RankPair {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    int r = 0;
    int s = 0;

    friend bool operator==(const RankPair&, const RankPair&) = default;
};

using RankPairList = std::vector<RankPair>;

/// One neighbor of a query row: squared Euclidean distance and row index.
struct Neighbor {
    double dist2 = 0.0;
    Eigen::Index index = 0;

    friend bool operator<(const Neighbor& a, const Neighbor& b)
    {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
};

/// Squared Euclidean distance accumulated in column order. Every routine that
/// compares patch distances goes through this so that ranks are reproducible.
template <typename DerivedA, typename DerivedB>
double squared_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    double acc = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double d = a(k) - b(k);
        acc += d * d;
    }
    return acc;
}

/// Exact c nearest rows of `reference` for every row of `query`, sorted by
/// (distance, index). The search walks the reference rows in order of their
/// highest-variance coordinate and stops once that coordinate alone rules out
/// further improvement, so the result is identical to a full scan.
template <typename DerivedQ, typename DerivedR>
std::vector<std::vector<Neighbor>> nearest_rows(const Eigen::MatrixBase<DerivedQ>& query,
                                                const Eigen::MatrixBase<DerivedR>& reference, int c)
{
    require(query.cols() == reference.cols(), "nearest_rows: dimension mismatch");
    require(c >= 1, "nearest_rows: c must be >= 1");
    const Eigen::Index n_ref = reference.rows();
    const auto keep = static_cast<std::size_t>(std::min<Eigen::Index>(c, n_ref));

    Eigen::Index axis = 0;
    if (n_ref > 1 && reference.cols() > 0) {
        const Eigen::RowVectorXd mean = reference.colwise().mean();
        ((reference.rowwise() - mean).array().square().colwise().sum()).maxCoeff(&axis);
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_ref));
    for (Eigen::Index k = 0; k < n_ref; ++k) order[static_cast<std::size_t>(k)] = k;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double va = reference(a, axis), vb = reference(b, axis);
        return va < vb || (va == vb && a < b);
    });
    std::vector<double> keys(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) keys[k] = reference(order[k], axis);

    std::vector<std::vector<Neighbor>> out(static_cast<std::size_t>(query.rows()));
    std::vector<Neighbor> heap;
    heap.reserve(keep + 1);
    for (Eigen::Index qi = 0; qi < query.rows(); ++qi) {
        heap.clear();
        const auto row = query.row(qi);
        const double key = row(axis);
        const auto consider = [&](std::size_t pos) {
            const Eigen::Index idx = order[pos];
            const Neighbor nb{squared_distance(row, reference.row(idx)), idx};
            if (heap.size() < keep) {
                heap.push_back(nb);
                std::push_heap(heap.begin(), heap.end());
            } else if (nb < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = nb;
                std::push_heap(heap.begin(), heap.end());
            }
        };
        const auto ruled_out = [&](std::size_t pos) {
            if (heap.size() < keep) return false;
            const double gap = key - keys[pos];
            return gap * gap > heap.front().dist2;
        };
        const auto start = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), key) - keys.begin());
        std::size_t right = start;
        std::size_t left = start;  // next candidate on the left is left - 1
        bool go_right = right < keys.size();
        bool go_left = left > 0;
        while (go_right || go_left) {
            if (go_right) {
                if (ruled_out(right)) {
                    go_right = false;
                } else {
                    consider(right);
                    go_right = ++right < keys.size();
                }
            }
            if (go_left) {
                if (ruled_out(left - 1)) {
                    go_left = false;
                } else {
                    consider(left - 1);
                    go_left = --left > 0;
                }
            }
        }
        std::sort_heap(heap.begin(), heap.end());
        out[static_cast<std::size_t>(qi)] = heap;
    }
    return out;
}

/// Full matrix of squared distances between the rows of P and Q. Each entry
/// equals squared_distance(P.row(i), Q.row(j)) bit for bit.
template <typename DerivedP, typename DerivedQ>
Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedQ>& Q)
{
    require(P.cols() == Q.cols(), "pairwise_squared_distances: dimension mismatch");
    const Eigen::MatrixXd Pc = P;  // column-major copy for contiguous columns
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(P.rows(), Q.rows());
    for (Eigen::Index k = 0; k < P.cols(); ++k)
        for (Eigen::Index j = 0; j < Q.rows(); ++j) D.col(j).array() += (Pc.col(k).array() - Q(j, k)).square();
    return D;
}

namespace detail {

// Keeps the c best (dist2, index) entries in ascending order.
inline void insert_top(std::vector<Neighbor>& top, const Neighbor& nb, std::size_t keep)
{
    if (top.size() == keep && !(nb < top.back())) return;
    auto pos = std::upper_bound(top.begin(), top.end(), nb);
    top.insert(pos, nb);
    if (top.size() > keep) top.pop_back();
}

}  // namespace detail

/// All (i, j) where q_j ranks within p_i's cap_c nearest in Q and p_i ranks
/// within q_j's cap_c nearest in P. Sorted by (i, j).
template <typename DerivedP, typename DerivedQ>
RankPairList reciprocal_rank_pairs(const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedQ>& Q,
                                   const SimilarityConfig& cfg)
{
    require(P.rows() > 0 && Q.rows() > 0, "reciprocal_rank_pairs: empty patch set");
    require(P.cols() == Q.cols(), "reciprocal_rank_pairs: dimension mismatch");
    require(cfg.cap_c >= 1, "reciprocal_rank_pairs: cap_c must be >= 1");
    const Eigen::MatrixXd D = pairwise_squared_distances(P, Q);
    const auto keep_q = static_cast<std::size_t>(std::min<Eigen::Index>(cfg.cap_c, Q.rows()));
    const auto keep_p = static_cast<std::size_t>(std::min<Eigen::Index>(cfg.cap_c, P.rows()));

    std::vector<std::vector<Neighbor>> p_to_q(static_cast<std::size_t>(P.rows()));
    std::vector<std::vector<Neighbor>> q_to_p(static_cast<std::size_t>(Q.rows()));
    for (Eigen::Index j = 0; j < Q.rows(); ++j) {
        auto& col_top = q_to_p[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            const double d = D(i, j);
            detail::insert_top(col_top, {d, i}, keep_p);
            detail::insert_top(p_to_q[static_cast<std::size_t>(i)], {d, j}, keep_q);
        }
    }

    RankPairList pairs;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const auto& nbrs = p_to_q[static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < nbrs.size(); ++r) {
            const Eigen::Index j = nbrs[r].index;
            const auto& back = q_to_p[static_cast<std::size_t>(j)];
            for (std::size_t s = 0; s < back.size(); ++s) {
                if (back[s].index == i) {
                    pairs.push_back({i, j, static_cast<int>(r + 1), static_cast<int>(s + 1)});
                    break;
                }
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const RankPair& a, const RankPair& b) { return a.i < b.i || (a.i == b.i && a.j < b.j); });
    return pairs;
}

/// exp(-r s / sigma1) inside the rank cap, zero outside.
inline double mbp(int r, int s, const SimilarityConfig& cfg)
{
    require(r >= 1 && s >= 1, "mbp: ranks are 1-based");
    if (r > cfg.cap_c || s > cfg.cap_c) return 0.0;
    return std::exp(-static_cast<double>(r) * s / cfg.sigma1);
}

template <typename DerivedP, typename DerivedQ>
double mbs(const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedQ>& Q, const SimilarityConfig& cfg)
{
    double total = 0.0;
    for (const auto& pr : reciprocal_rank_pairs(P, Q, cfg)) total += mbp(pr.r, pr.s, cfg);
    return total / static_cast<double>(std::min(P.rows(), Q.rows()));
}

/// Fraction of mutual nearest-neighbor pairs, normalized by min{M, N}.
template <typename DerivedP, typename DerivedQ>
double bbs(const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedQ>& Q)
{
    const auto pairs = reciprocal_rank_pairs(P, Q, SimilarityConfig{1.0, 1});
    return static_cast<double>(pairs.size()) / static_cast<double>(std::min(P.rows(), Q.rows()));
}

inline RankPairList reciprocal_rank_pairs(const PatchSet& P, const PatchSet& Q, const SimilarityConfig& cfg)
{
    return reciprocal_rank_pairs(P.patches, Q.patches, cfg);
}
inline double mbs(const PatchSet& P, const PatchSet& Q, const SimilarityConfig& cfg)
{
    return mbs(P.patches, Q.patches, cfg);
}
inline double bbs(const PatchSet& P, const PatchSet& Q) { return bbs(P.patches, Q.patches); }

/// MBS rescaled by exp(1/sigma1) so that a set matched against itself scores
/// at least 1 and cap_c = 1 reproduces BBS exactly. Used wherever the score is
/// compared against fixed thresholds or summed with overlap ratios.
inline double mbs_normalized(const PatchSet& P, const PatchSet& Q, const SimilarityConfig& cfg)
{
    return mbs(P, Q, cfg) * std::exp(1.0 / cfg.sigma1);
}

struct BatchScore {
    std::vector<double> scores;
    std::size_t best = 0;
};

/// Scores every candidate against the template; ties go to the lowest index.
BatchScore batch_score(std::span<const PatchSet> candidates, const PatchSet& tmpl, const SimilarityConfig& cfg);

/// Index of the largest value, lowest index on ties.
std::size_t argmax_first(std::span<const double> values);

}  // namespace tm3
