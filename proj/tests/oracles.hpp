#pragma once

// Slow reference implementations used by the tests.

#include <cmath>
#include <map>
#include <utility>

#include <Eigen/Core>

#include "tm3/similarity.hpp"

namespace oracle {

inline Eigen::MatrixXd distances(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q)
{
    Eigen::MatrixXd D(P.rows(), Q.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < Q.rows(); ++j) D(i, j) = (P.row(i) - Q.row(j)).norm();
    return D;
}

// 1-based rank of column j in row i of D (ties: lower index first).
inline int row_rank(const Eigen::MatrixXd& D, Eigen::Index i, Eigen::Index j)
{
    int r = 1;
    for (Eigen::Index k = 0; k < D.cols(); ++k)
        if (D(i, k) < D(i, j) || (D(i, k) == D(i, j) && k < j)) ++r;
    return r;
}

inline int col_rank(const Eigen::MatrixXd& D, Eigen::Index i, Eigen::Index j)
{
    int s = 1;
    for (Eigen::Index k = 0; k < D.rows(); ++k)
        if (D(k, j) < D(i, j) || (D(k, j) == D(i, j) && k < i)) ++s;
    return s;
}

inline tm3::RankPairList rank_pairs(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int cap)
{
    const auto D = distances(P, Q);
    tm3::RankPairList out;
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < Q.rows(); ++j) {
            const int r = row_rank(D, i, j), s = col_rank(D, i, j);
            if (r <= cap && s <= cap) out.push_back({i, j, r, s});
        }
    return out;
}

inline double mbs(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, double sigma1, int cap)
{
    double total = 0.0;
    for (const auto& p : rank_pairs(P, Q, cap)) total += std::exp(-double(p.r) * p.s / sigma1);
    return total / double(std::min(P.rows(), Q.rows()));
}

inline double bbs(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q)
{
    return double(rank_pairs(P, Q, 1).size()) / double(std::min(P.rows(), Q.rows()));
}

}  // namespace oracle

#include <Eigen/Eigenvalues>

#include "tm3/memory_filter.hpp"

namespace oracle {

// Plain proximal gradient with the exact Lipschitz constant, run until the
// iterate stops moving.
inline double slow_selection_optimum(const tm3::SelectionProblem& pb, int max_iters = 400000)
{
    const Eigen::MatrixXd L = tm3::laplacian(tm3::build_weight_matrix(pb.X, pb.sigma2, pb.cap_c));
    const Eigen::MatrixXd A = pb.X.transpose() * pb.X + pb.delta * (L + L.transpose());
    const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().cwiseAbs().maxCoeff();
    const Eigen::Index n = pb.X.cols();
    const Eigen::MatrixXd G = pb.X.transpose() * pb.X;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < max_iters; ++t) {
        const Eigen::MatrixXd Z = S - (A * S - G) / lip;
        Eigen::MatrixXd next = Z;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double nrm = Z.row(i).norm();
            const double th = pb.beta / (lip * (pb.h(i) + pb.epsilon));
            next.row(i) *= nrm > th ? 1.0 - th / nrm : 0.0;
        }
        const double moved = (next - S).norm();
        S = next;
        if (moved < 1e-15) break;
    }
    return tm3::objective(S, pb, L);
}

// argmin_s 1/2 |s - z|^2 + t |s| for a 2-vector by pattern search over 64
// directions with a shrinking step, started from z. The origin, where the
// objective has its kink, is compared separately.
inline Eigen::Vector2d prox_numeric(const Eigen::Vector2d& z, double t)
{
    const auto f = [&](const Eigen::Vector2d& s) { return 0.5 * (s - z).squaredNorm() + t * s.norm(); };
    Eigen::Vector2d best = z;
    double fb = f(best);
    double step = std::max(z.norm(), 1.0);
    while (step > 1e-12) {
        bool moved = false;
        for (int k = 0; k < 64; ++k) {
            const double a = 2.0 * M_PI * k / 64.0;
            const Eigen::Vector2d c = best + step * Eigen::Vector2d(std::cos(a), std::sin(a));
            const double fc = f(c);
            if (fc < fb) {
                fb = fc;
                best = c;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    if (f(Eigen::Vector2d::Zero()) <= fb) return Eigen::Vector2d::Zero();
    return best;
}

}  // namespace oracle
