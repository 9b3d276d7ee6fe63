#pragma once

#include <array>
#include <cmath>

namespace tm3::theory {

namespace detail {

inline constexpr std::array<double, 5> kGlNodes = {0.14887433898163122, 0.4333953941292472, 0.6794095682990244,
                                                   0.8650633666889845, 0.9739065285171717};
inline constexpr std::array<double, 5> kGlWeights = {0.295524224714753, 0.2692667193099965, 0.219086362515982,
                                                     0.14945134915058036, 0.06667134430868807};

template <typename F>
Eigen::VectorXd gauss_legendre_10(F& f, double a, double b)
{
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Eigen::VectorXd acc;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
        const double dx = half * kGlNodes[k];
        Eigen::VectorXd term = kGlWeights[k] * (f(mid - dx) + f(mid + dx));
        if (acc.size() == 0)
            acc = std::move(term);
        else
            acc += term;
    }
    return half * acc;
}

template <typename F>
void adaptive_step(F& f, double a, double b, const Eigen::VectorXd& whole, const Eigen::VectorXd& tol, int depth,
                   AdaptiveResult& out)
{
    const double mid = 0.5 * (a + b);
    const Eigen::VectorXd left = gauss_legendre_10(f, a, mid);
    const Eigen::VectorXd right = gauss_legendre_10(f, mid, b);
    const Eigen::VectorXd both = left + right;
    const double ratio = ((both - whole).array().abs() / tol.array()).maxCoeff();
    if (ratio <= 1.0 || depth <= 0) {
        if (ratio > 1.0) out.converged = false;
        out.value += both;
        out.error += (both - whole).cwiseAbs().maxCoeff();
        return;
    }
    const Eigen::VectorXd sub_tol = tol / std::sqrt(2.0);
    adaptive_step(f, a, mid, left, sub_tol, depth - 1, out);
    adaptive_step(f, mid, b, right, sub_tol, depth - 1, out);
}

}  // namespace detail

template <typename F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double rel_tol, double abs_tol, int max_depth)
{
    AdaptiveResult out;
    const Eigen::VectorXd whole = detail::gauss_legendre_10(f, a, b);
    out.value = Eigen::VectorXd::Zero(whole.size());
    if (!(b > a)) return out;
    const Eigen::VectorXd tol = (rel_tol * whole.cwiseAbs()).cwiseMax(abs_tol);
    detail::adaptive_step(f, a, b, whole, tol, max_depth, out);
    return out;
}

}  // namespace tm3::theory
