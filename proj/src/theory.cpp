#include "tm3/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tm3/error.hpp"
#include "tm3/geometry.hpp"

namespace tm3::theory {

namespace {

double normal_pdf(double x, double mean, double sd)
{
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(double x, double mean, double sd)
{
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Running mean and standard error of one per-trial quantity.
class Moments {
public:
    void add(double v)
    {
        s1_.add(v);
        s2_.add(v * v);
        ++n_;
    }
    double mean() const { return s1_.value() / static_cast<double>(n_); }
    double variance() const
    {
        if (n_ < 2) return 0.0;
        const double m = mean();
        const double var = (s2_.value() - static_cast<double>(n_) * m * m) / static_cast<double>(n_ - 1);
        return std::max(var, 0.0);
    }
    Estimate estimate() const { return {mean(), std::sqrt(variance() / static_cast<double>(n_))}; }

private:
    CompensatedSum s1_, s2_;
    std::int64_t n_ = 0;
};

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end)
{
    CompensatedSum s;
    for (std::size_t k = begin; k < end; ++k) s.add(v[k]);
    return s.value() / static_cast<double>(end - begin);
}

// Population variance by two passes.
double variance_of(const std::vector<double>& v, std::size_t begin, std::size_t end)
{
    const double m = mean_of(v, begin, end);
    CompensatedSum s;
    for (std::size_t k = begin; k < end; ++k) s.add((v[k] - m) * (v[k] - m));
    return s.value() / static_cast<double>(end - begin);
}

struct MatchedMean {
    double lhs = 0.0;  // Var(mbs) - Var(bbs)
    double rhs = 0.0;  // E[shifted^2] - E[shifted]
};

// Shift the surrogate scores so their mean equals the BBP mean, then evaluate
// both sides of V_MBS - V_BBS = E[MBS^2] - E[MBS].
MatchedMean matched_mean(const std::vector<double>& m, const std::vector<double>& b, std::size_t begin,
                         std::size_t end)
{
    const double shift = mean_of(b, begin, end) - mean_of(m, begin, end);
    CompensatedSum sq, lin;
    for (std::size_t k = begin; k < end; ++k) {
        const double s = m[k] + shift;
        sq.add(s * s);
        lin.add(s);
    }
    const double n = static_cast<double>(end - begin);
    MatchedMean out;
    out.lhs = variance_of(m, begin, end) - variance_of(b, begin, end);
    out.rhs = sq.value() / n - lin.value() / n;
    return out;
}

// Raw moments E[a^k], k = 1..4, of a ~ Binomial(n, c), via falling factorials.
Eigen::Array4d binomial_moments(int n, double c)
{
    const double f1 = n;
    const double f2 = f1 * (n - 1);
    const double f3 = f2 * (n - 2);
    const double f4 = f3 * (n - 3);
    const double c2 = c * c, c3 = c2 * c, c4 = c3 * c;
    return {f1 * c, f2 * c2 + f1 * c, f3 * c3 + 3.0 * f2 * c2 + f1 * c,
            f4 * c4 + 6.0 * f3 * c3 + 7.0 * f2 * c2 + f1 * c};
}

constexpr int kBatches = 20;

}  // namespace

DistributionSpec DistributionSpec::gaussian(double mean, double sd)
{
    require(std::isfinite(mean) && sd > 0.0 && std::isfinite(sd), "gaussian: sd must be positive and finite");
    DistributionSpec d;
    d.kind_ = Kind::gaussian;
    d.a_ = mean;
    d.b_ = sd;
    return d;
}

DistributionSpec DistributionSpec::uniform(double lo, double hi)
{
    require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, "uniform: support must have positive length");
    DistributionSpec d;
    d.kind_ = Kind::uniform;
    d.a_ = lo;
    d.b_ = hi;
    return d;
}

DistributionSpec DistributionSpec::mixture(double w, double m1, double s1, double m2, double s2)
{
    require(w >= 0.0 && w <= 1.0, "mixture: weight must be in [0, 1]");
    require(s1 > 0.0 && s2 > 0.0, "mixture: component sds must be positive");
    DistributionSpec d;
    d.kind_ = Kind::mixture;
    d.w_ = w;
    d.a_ = m1;
    d.b_ = s1;
    d.c_ = m2;
    d.d_ = s2;
    return d;
}

double DistributionSpec::pdf(double x) const
{
    switch (kind_) {
    case Kind::gaussian: return normal_pdf(x, a_, b_);
    case Kind::uniform: return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
    case Kind::mixture: return w_ * normal_pdf(x, a_, b_) + (1.0 - w_) * normal_pdf(x, c_, d_);
    }
    return 0.0;
}

double DistributionSpec::cdf(double x) const
{
    switch (kind_) {
    case Kind::gaussian: return normal_cdf(x, a_, b_);
    case Kind::uniform: return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0);
    case Kind::mixture: return w_ * normal_cdf(x, a_, b_) + (1.0 - w_) * normal_cdf(x, c_, d_);
    }
    return 0.0;
}

double DistributionSpec::sample(std::mt19937_64& rng) const
{
    switch (kind_) {
    case Kind::gaussian: return std::normal_distribution<double>(a_, b_)(rng);
    case Kind::uniform: return std::uniform_real_distribution<double>(a_, b_)(rng);
    case Kind::mixture: {
        const bool first = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < w_;
        return first ? std::normal_distribution<double>(a_, b_)(rng) : std::normal_distribution<double>(c_, d_)(rng);
    }
    }
    return 0.0;
}

std::pair<double, double> DistributionSpec::support() const
{
    constexpr double k = 9.0;
    switch (kind_) {
    case Kind::gaussian: return {a_ - k * b_, a_ + k * b_};
    case Kind::uniform: return {a_, b_};
    case Kind::mixture: return {std::min(a_ - k * b_, c_ - k * d_), std::max(a_ + k * b_, c_ + k * d_)};
    }
    return {0.0, 0.0};
}

std::string DistributionSpec::describe() const
{
    std::ostringstream os;
    switch (kind_) {
    case Kind::gaussian: os << "gaussian(" << a_ << "," << b_ << ")"; break;
    case Kind::uniform: os << "uniform(" << a_ << "," << b_ << ")"; break;
    case Kind::mixture: os << "mixture(" << w_ << "," << a_ << "," << b_ << "," << c_ << "," << d_ << ")"; break;
    }
    return os.str();
}

TheoryReport mc_estimate(const DistributionSpec& specP, const DistributionSpec& specQ, int N, int M,
                         double sigma1, std::int64_t trials, std::uint64_t seed)
{
    require(N >= 1 && M >= 1, "mc_estimate: set sizes must be >= 1");
    require(sigma1 > 0.0, "mc_estimate: sigma1 must be positive");
    require(trials >= 100, "mc_estimate: need at least 100 trials");

    Moments m1, m2, bbp, bbp2, margin, ex1, ex2, exm;
    std::vector<double> scores(static_cast<std::size_t>(trials));
    std::vector<double> buddies(static_cast<std::size_t>(trials));
    std::vector<double> P(static_cast<std::size_t>(N)), Q(static_cast<std::size_t>(M));

    for (std::int64_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        for (auto& p : P) p = specP.sample(rng);
        for (auto& q : Q) q = specQ.sample(rng);
        const int i = std::uniform_int_distribution<int>(0, N - 1)(rng);
        const int j = std::uniform_int_distribution<int>(0, M - 1)(rng);
        const double d = std::abs(P[i] - Q[j]);
        int a = 0, b = 0;
        for (int k = 0; k < N; ++k)
            if (k != i && std::abs(P[k] - Q[j]) <= d) ++a;
        for (int l = 0; l < M; ++l)
            if (l != j && std::abs(Q[l] - P[i]) <= d) ++b;
        const double x = static_cast<double>(a) * b;

        const double s = surrogate_mbp(x, sigma1);
        const double s2 = surrogate_mbp_squared(x, sigma1);
        const double bb = (a == 0 && b == 0) ? 1.0 : 0.0;
        const double e1 = std::exp(-x / sigma1);
        const double e2 = std::exp(-2.0 * x / sigma1);
        m1.add(s);
        m2.add(s2);
        margin.add(s2 - s);
        bbp.add(bb);
        bbp2.add(bb * bb);
        ex1.add(e1);
        ex2.add(e2);
        exm.add(e2 - e1);
        scores[static_cast<std::size_t>(t)] = s;
        buddies[static_cast<std::size_t>(t)] = bb;
    }

    TheoryReport rep;
    rep.n = N;
    rep.m = M;
    rep.sigma1 = sigma1;
    rep.trials = trials;
    rep.e_mbs = m1.estimate();
    rep.e_mbs2 = m2.estimate();
    rep.e_bbs = bbp.estimate();
    rep.e_bbs2 = bbp2.estimate();
    rep.lemma3_margin = margin.estimate();
    rep.exact_e_mbs = ex1.estimate();
    rep.exact_e_mbs2 = ex2.estimate();
    rep.exact_margin = exm.estimate();

    const auto n = static_cast<std::size_t>(trials);
    const MatchedMean whole = matched_mean(scores, buddies, 0, n);

    // Batch means give standard errors for the nonlinear statistics.
    Moments vm, vb, lhs_batches;
    for (int k = 0; k < kBatches; ++k) {
        const std::size_t begin = n * static_cast<std::size_t>(k) / kBatches;
        const std::size_t end = n * static_cast<std::size_t>(k + 1) / kBatches;
        vm.add(variance_of(scores, begin, end));
        vb.add(variance_of(buddies, begin, end));
        lhs_batches.add(matched_mean(scores, buddies, begin, end).lhs);
    }
    rep.v_mbs = {variance_of(scores, 0, n), vm.estimate().stderr_};
    rep.v_bbs = {variance_of(buddies, 0, n), vb.estimate().stderr_};
    rep.theorem1_margin = {whole.lhs, lhs_batches.estimate().stderr_};
    rep.theorem1_rhs = {whole.rhs, lhs_batches.estimate().stderr_};
    rep.theorem1_identity_gap = whole.lhs - whole.rhs;

    rep.lemma3_verdict = rep.lemma3_margin.value > 3.0 * rep.lemma3_margin.stderr_;
    rep.theorem1_verdict = verify_theorem1(rep).passed();
    return rep;
}

QuadratureResult quadrature_expectation(const DistributionSpec& specP, const DistributionSpec& specQ, int N,
                                        int M, double sigma1, double rel_tol)
{
    require(N >= 1 && M >= 1, "quadrature_expectation: set sizes must be >= 1");
    require(sigma1 > 0.0, "quadrature_expectation: sigma1 must be positive");
    require(rel_tol > 0.0, "quadrature_expectation: tolerance must be positive");

    constexpr int kTerms = 8;  // E x, E x^2, E x^3, E x^4, bbp, Cp*Cq, (Cp*Cq)^2, mass
    const auto [plo, phi] = specP.support();
    const auto [qlo, qhi] = specQ.support();
    const double inner_tol = rel_tol * 1e-2;
    // Far in the tails the CDF differences cancel to round-off; nothing there
    // can matter at this absolute level.
    constexpr double abs_tol = 1e-16;
    bool inner_ok = true;

    const auto outer = [&](double q) -> Eigen::VectorXd {
        const double fq = specQ.pdf(q);
        if (fq == 0.0) return Eigen::VectorXd::Zero(kTerms);
        const auto inner = [&](double p) -> Eigen::VectorXd {
            Eigen::VectorXd v(kTerms);
            const double fp = specP.pdf(p);
            if (fp == 0.0) return Eigen::VectorXd::Zero(kTerms);
            const double d = std::abs(p - q);
            const double cp = specP.cdf(q + d) - specP.cdf(q - d);
            const double cq = specQ.cdf(p + d) - specQ.cdf(p - d);
            const Eigen::Array4d ea = binomial_moments(N - 1, cp);
            const Eigen::Array4d eb = binomial_moments(M - 1, cq);
            v.head<4>() = (ea * eb).matrix();
            v(4) = std::pow(1.0 - cp, N - 1) * std::pow(1.0 - cq, M - 1);
            v(5) = cp * cq;
            v(6) = cp * cp * cq * cq;
            v(7) = 1.0;
            return v * fp;
        };
        AdaptiveResult r;
        if (q > plo && q < phi) {
            AdaptiveResult left = integrate_adaptive(inner, plo, q, inner_tol, abs_tol);
            AdaptiveResult right = integrate_adaptive(inner, q, phi, inner_tol, abs_tol);
            r.value = left.value + right.value;
            r.converged = left.converged && right.converged;
        } else {
            r = integrate_adaptive(inner, plo, phi, inner_tol, abs_tol);
        }
        inner_ok = inner_ok && r.converged;
        return r.value * fq;
    };
    const AdaptiveResult res = integrate_adaptive(outer, qlo, qhi, rel_tol, abs_tol);
    const Eigen::VectorXd& I = res.value;

    QuadratureResult out;
    out.e_x = I(0);
    out.e_x2 = I(1);
    out.e_x3 = I(2);
    out.e_x4 = I(3);
    const double s = sigma1, s2 = s * s;
    out.e_mbs = 1.0 - I(0) / s + I(1) / (2.0 * s2);
    out.e_mbs2 = 1.0 - 2.0 * I(0) / s + 2.0 * I(1) / s2;
    out.e_mbs_sq = 1.0 - 2.0 * I(0) / s + 2.0 * I(1) / s2 - I(2) / (s2 * s) + I(3) / (4.0 * s2 * s2);
    out.v_mbs = out.e_mbs_sq - out.e_mbs * out.e_mbs;
    out.e_bbs = I(4);
    out.lemma3_margin = out.e_mbs2 - out.e_mbs;
    out.lemma3_closed_form = 3.0 * I(1) / (2.0 * s2) - I(0) / s;

    const double mn = static_cast<double>(M) * N;
    out.i1 = I(5);
    out.i2 = I(6);
    out.plugin_e_mbs = 1.0 - mn / s * I(5) + mn * mn / (2.0 * s2) * I(6);
    out.plugin_v_mbs = mn * mn / s2 * (I(6) - I(5) * I(5));
    out.plugin_margin_printed = 3.0 * mn * mn / (2.0 * s2) * I(6);

    out.achieved_rel_error = res.error / std::max(I.cwiseAbs().maxCoeff(), 1e-300);
    out.converged = res.converged && inner_ok && std::abs(I(7) - 1.0) < 1e-6;
    return out;
}

double density_mass(const DistributionSpec& spec, double rel_tol)
{
    const auto [lo, hi] = spec.support();
    const auto f = [&](double x) { return Eigen::VectorXd::Constant(1, spec.pdf(x)); };
    return integrate_adaptive(f, lo, hi, rel_tol, 1e-300).value(0);
}

Lemma3Verdict verify_lemma3(const TheoryReport& report, const QuadratureResult& quad)
{
    Lemma3Verdict v;
    v.mc_margin = report.lemma3_margin.value;
    v.mc_stderr = report.lemma3_margin.stderr_;
    v.closed_form = quad.lemma3_closed_form;
    v.tolerance = 3.0 * v.mc_stderr + std::max(quad.achieved_rel_error, 1e-5) * std::abs(v.closed_form);
    v.margin_positive = v.mc_margin > 3.0 * v.mc_stderr;
    v.closed_form_agrees = std::abs(v.mc_margin - v.closed_form) <= v.tolerance;
    return v;
}

Theorem1Verdict verify_theorem1(const TheoryReport& report)
{
    Theorem1Verdict v;
    v.lhs = report.theorem1_margin.value;
    v.rhs = report.theorem1_rhs.value;
    v.stderr_ = report.theorem1_margin.stderr_;
    const double round_off = 1e-9 * std::max(std::abs(v.lhs), 1.0);
    v.identity_holds = std::abs(v.lhs - v.rhs) <= 3.0 * v.stderr_ + round_off;
    v.positive = v.lhs > 3.0 * v.stderr_;
    return v;
}

}  // namespace tm3::theory
