#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace tm3::theory {

/// A one-dimensional patch distribution with density, CDF and sampler.
class DistributionSpec {
public:
    enum class Kind { gaussian, uniform, mixture };

    static DistributionSpec gaussian(double mean, double sd);
    static DistributionSpec uniform(double lo, double hi);
    /// w * N(m1, s1) + (1 - w) * N(m2, s2).
    static DistributionSpec mixture(double w, double m1, double s1, double m2, double s2);

    Kind kind() const { return kind_; }
    double pdf(double x) const;
    double cdf(double x) const;
    double sample(std::mt19937_64& rng) const;
    /// Interval outside which the mass is negligible (< 1e-18).
    std::pair<double, double> support() const;
    std::string describe() const;

private:
    Kind kind_ = Kind::gaussian;
    double a_ = 0.0, b_ = 1.0;        // mean/sd, lo/hi, or first component
    double w_ = 1.0, c_ = 0.0, d_ = 1.0;  // mixture weight and second component
};

/// Second-order Taylor surrogate of exp(-x / sigma1).
inline double surrogate_mbp(double x, double sigma1)
{
    const double u = x / sigma1;
    return 1.0 - u + 0.5 * u * u;
}

/// Second-order Taylor surrogate of exp(-2x / sigma1), the squared pair score.
inline double surrogate_mbp_squared(double x, double sigma1)
{
    const double u = x / sigma1;
    return 1.0 - 2.0 * u + 2.0 * u * u;
}

/// Estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

struct TheoryReport {
    int n = 0, m = 0;
    double sigma1 = 0.0;
    std::int64_t trials = 0;

    Estimate e_mbs;         // E[surrogate MBP]
    Estimate e_mbs2;        // E[surrogate of MBP^2]
    Estimate e_bbs;         // E[BBP]
    Estimate e_bbs2;        // E[BBP^2]
    Estimate v_mbs;         // Var[surrogate MBP]
    Estimate v_bbs;         // Var[BBP]
    Estimate lemma3_margin; // e_mbs2 - e_mbs

    // Matched-mean protocol: the surrogate scores are shifted so that their
    // mean equals e_bbs, then both sides of the variance identity are formed.
    Estimate theorem1_margin;   // V_MBS - V_BBS
    Estimate theorem1_rhs;      // E[shifted^2] - E[shifted]
    double theorem1_identity_gap = 0.0;

    // Same statistics for the exact exponential score exp(-x / sigma1).
    Estimate exact_e_mbs;
    Estimate exact_e_mbs2;
    Estimate exact_margin;  // never positive: exp(-2x) <= exp(-x)

    bool lemma3_verdict = false;
    bool theorem1_verdict = false;
};

/// Monte Carlo over random patch sets: each trial draws N points from specP
/// and M from specQ, picks a uniformly random pair (i, j) and evaluates the
/// rank-product statistic x = #{k != i : |p_k - q_j| <= d} * #{l != j : |q_l - p_i| <= d}
/// with d = |p_i - q_j|. Deterministic per seed.
TheoryReport mc_estimate(const DistributionSpec& specP, const DistributionSpec& specQ, int N, int M,
                         double sigma1, std::int64_t trials, std::uint64_t seed);

struct QuadratureResult {
    // Exact expectations of the surrogate statistics under the model where the
    // neighbor counts are Binomial(N-1, Cp) and Binomial(M-1, Cq).
    double e_x = 0.0, e_x2 = 0.0, e_x3 = 0.0, e_x4 = 0.0;
    double e_mbs = 0.0;
    double e_mbs2 = 0.0;
    double e_mbs_sq = 0.0;  // E[surrogate^2]
    double v_mbs = 0.0;     // E[surrogate^2] - e_mbs^2
    double e_bbs = 0.0;
    double lemma3_margin = 0.0;         // e_mbs2 - e_mbs
    double lemma3_closed_form = 0.0;    // 3 E[x^2] / (2 sigma1^2) - E[x] / sigma1

    // Plug-in forms that replace the counts by N*Cp and M*Cq.
    double i1 = 0.0;  // double integral of Cp * Cq
    double i2 = 0.0;  // double integral of Cp^2 * Cq^2
    double plugin_e_mbs = 0.0;
    double plugin_v_mbs = 0.0;            // (MN/sigma1)^2 (i2 - i1^2)
    double plugin_margin_printed = 0.0;   // 3 M^2 N^2 i2 / (2 sigma1^2)

    double achieved_rel_error = 0.0;
    bool converged = false;
};

QuadratureResult quadrature_expectation(const DistributionSpec& specP, const DistributionSpec& specQ, int N,
                                        int M, double sigma1, double rel_tol = 1e-5);

/// Integral of the density over its support.
double density_mass(const DistributionSpec& spec, double rel_tol = 1e-10);

struct Lemma3Verdict {
    bool margin_positive = false;   // margin > 3 standard errors
    bool closed_form_agrees = false;
    double mc_margin = 0.0;
    double mc_stderr = 0.0;
    double closed_form = 0.0;
    double tolerance = 0.0;
    bool passed() const { return margin_positive && closed_form_agrees; }
};

Lemma3Verdict verify_lemma3(const TheoryReport& report, const QuadratureResult& quad);

struct Theorem1Verdict {
    bool identity_holds = false;  // |lhs - rhs| within 3 standard errors
    bool positive = false;        // lhs > 3 standard errors
    double lhs = 0.0, rhs = 0.0, stderr_ = 0.0;
    bool passed() const { return identity_holds && positive; }
};

Theorem1Verdict verify_theorem1(const TheoryReport& report);

/// Adaptive Gauss-Legendre on [a, b] for a vector-valued integrand.
/// Subdivides until every component meets max(rel_tol * |I|, abs_tol).
struct AdaptiveResult {
    Eigen::VectorXd value;
    double error = 0.0;
    bool converged = true;
};

template <typename F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double rel_tol, double abs_tol, int max_depth = 30);

}  // namespace tm3::theory

#include "tm3/detail/quadrature_impl.hpp"
