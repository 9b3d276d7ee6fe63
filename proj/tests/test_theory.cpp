#include <doctest.h>

#include <cmath>
#include <random>

#include "tm3/error.hpp"
#include "tm3/theory.hpp"

using namespace tm3;
using namespace tm3::theory;

namespace {

bool within(const Estimate& e, double target, double k = 3.0) { return std::abs(e.value - target) <= k * e.stderr_; }

}  // namespace

TEST_CASE("surrogate pair score")
{
    CHECK(surrogate_mbp(0.0, 0.5) == 1.0);
    CHECK(surrogate_mbp(0.5, 0.5) == doctest::Approx(0.5));
    CHECK(surrogate_mbp_squared(0.0, 0.5) == 1.0);

    // first and second derivatives at 0 agree with exp(-x / sigma)
    const double s = 0.7, h = 1e-4;
    const auto f = [&](double x) { return surrogate_mbp(x, s); };
    const auto g = [&](double x) { return std::exp(-x / s); };
    const double d1 = (f(h) - f(-h)) / (2 * h), e1 = (g(h) - g(-h)) / (2 * h);
    const double d2 = (f(h) - 2 * f(0) + f(-h)) / (h * h), e2 = (g(h) - 2 * g(0) + g(-h)) / (h * h);
    CHECK(d1 == doctest::Approx(e1).epsilon(1e-6));
    CHECK(d2 == doctest::Approx(e2).epsilon(1e-4));
    // and the residual is third order
    for (double x : {1e-2, 5e-3}) CHECK(std::abs(f(x) - g(x)) < std::pow(x / s, 3));
}

TEST_CASE("distributions")
{
    const std::vector<DistributionSpec> specs{DistributionSpec::gaussian(0, 1), DistributionSpec::uniform(-1, 2),
                                              DistributionSpec::mixture(0.3, -2, 0.5, 1, 1.5)};
    for (const auto& d : specs) {
        CHECK(density_mass(d) == doctest::Approx(1.0).epsilon(1e-6));
        const auto [lo, hi] = d.support();
        double prev = -1.0;
        for (int k = 0; k <= 200; ++k) {
            const double c = d.cdf(lo + (hi - lo) * k / 200.0);
            CHECK(c >= prev);
            prev = c;
        }
        std::mt19937_64 rng(1);
        double mean = 0.0;
        for (int k = 0; k < 20000; ++k) mean += d.sample(rng);
        mean /= 20000.0;
        // mean by quadrature of x f(x) on a fine grid
        double ref = 0.0;
        const int n = 200000;
        for (int k = 0; k < n; ++k) {
            const double x = lo + (hi - lo) * (k + 0.5) / n;
            ref += x * d.pdf(x) * (hi - lo) / n;
        }
        CHECK(mean == doctest::Approx(ref).epsilon(0.05).scale(1.0));
    }
    CHECK_THROWS_AS(DistributionSpec::gaussian(0, 0), ValidationError);
    CHECK_THROWS_AS(DistributionSpec::uniform(1, 1), ValidationError);
    CHECK_THROWS_AS(DistributionSpec::mixture(1.5, 0, 1, 0, 1), ValidationError);
}

TEST_CASE("single pair is always mutual")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    const auto r = mc_estimate(g, g, 1, 1, 0.5, 1000, 3);
    CHECK(r.e_bbs.value == 1.0);
    CHECK(r.e_mbs.value == 1.0);
}

TEST_CASE("indicator squares to itself")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    const auto r = mc_estimate(g, g, 6, 9, 0.5, 20000, 5);
    CHECK(r.e_bbs2.value == r.e_bbs.value);
    CHECK(r.v_mbs.value >= 0.0);
    CHECK(r.v_bbs.value >= 0.0);
    CHECK(r.e_mbs.stderr_ >= 0.0);
    CHECK(r.exact_margin.value <= 0.0);
}

TEST_CASE("monte carlo is deterministic per seed")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    const auto a = mc_estimate(g, g, 5, 5, 0.5, 5000, 9);
    const auto b = mc_estimate(g, g, 5, 5, 0.5, 5000, 9);
    CHECK(a.e_mbs.value == b.e_mbs.value);
    CHECK(a.e_bbs.value == b.e_bbs.value);
    CHECK(a.lemma3_margin.value == b.lemma3_margin.value);
}

TEST_CASE("quadrature agrees with monte carlo")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    const auto q = quadrature_expectation(g, g, 5, 5, 0.5);
    CHECK(q.converged);
    const auto r = mc_estimate(g, g, 5, 5, 0.5, 100000, 21);
    CHECK(within(r.e_mbs, q.e_mbs));
    CHECK(within(r.e_mbs2, q.e_mbs2));
    CHECK(within(r.e_bbs, q.e_bbs));
    CHECK(within(r.lemma3_margin, q.lemma3_margin));
    CHECK(q.v_mbs >= 0.0);
    CHECK(q.lemma3_margin == doctest::Approx(q.lemma3_closed_form).epsilon(1e-9));
}

TEST_CASE("quadrature with unequal distributions")
{
    const auto p = DistributionSpec::uniform(-1, 1);
    const auto qd = DistributionSpec::mixture(0.5, -1, 0.4, 1, 0.6);
    const auto q = quadrature_expectation(p, qd, 4, 7, 0.8);
    const auto r = mc_estimate(p, qd, 4, 7, 0.8, 100000, 2);
    CHECK(within(r.e_mbs, q.e_mbs));
    CHECK(within(r.e_bbs, q.e_bbs));
    CHECK(q.v_mbs >= 0.0);
}

TEST_CASE("expected rank product against a grid oracle")
{
    // both uniform on [0,1]: E[x] = (N-1)(M-1) E[Cp Cq], Cp = Cq = |[q-d, q+d] ∩ [0,1]|
    const int N = 4, M = 6;
    const auto u = DistributionSpec::uniform(0, 1);
    const auto q = quadrature_expectation(u, u, N, M, 0.5, 1e-8);
    const int n = 800;
    double acc = 0.0;
    const auto len = [](double c, double d) { return std::min(1.0, c + d) - std::max(0.0, c - d); };
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double p = (a + 0.5) / n, qq = (b + 0.5) / n, d = std::abs(p - qq);
            acc += len(qq, d) * len(p, d);
        }
    acc /= double(n) * n;
    CHECK(q.e_x == doctest::Approx((N - 1) * (M - 1) * acc).epsilon(1e-4));
}

TEST_CASE("wide kernel pushes the expectation to one")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    double prev_gap = 1.0;
    for (double s : {10.0, 100.0, 1000.0, 1e5}) {
        const auto q = quadrature_expectation(g, g, 5, 5, s);
        const double gap = std::abs(q.e_mbs - 1.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-3);
}

TEST_CASE("lemma 3 margin is positive across configurations")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    const auto u = DistributionSpec::uniform(-2, 2);
    struct Case {
        DistributionSpec p, q;
        int n, m;
        double s;
    };
    const std::vector<Case> cases{{g, g, 5, 5, 0.5}, {g, u, 8, 4, 1.0}, {u, u, 10, 10, 2.0}, {g, g, 3, 12, 0.25}};
    for (const auto& c : cases) {
        const auto q = quadrature_expectation(c.p, c.q, c.n, c.m, c.s);
        CHECK(q.lemma3_margin > 0.0);
        CHECK(q.v_mbs >= 0.0);
    }
}

TEST_CASE("theorem 1 identity under matched means")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    const auto r = mc_estimate(g, g, 8, 8, 0.5, 20000, 4);
    const auto v = verify_theorem1(r);
    CHECK(v.identity_holds);
    CHECK(v.positive);
    CHECK(v.lhs == doctest::Approx(v.rhs).epsilon(1e-6));
}

TEST_CASE("degenerate input is rejected")
{
    const auto g = DistributionSpec::gaussian(0, 1);
    CHECK_THROWS_AS(mc_estimate(g, g, 0, 5, 0.5, 1000, 1), ValidationError);
    CHECK_THROWS_AS(mc_estimate(g, g, 5, 5, 0.0, 1000, 1), ValidationError);
    CHECK_THROWS_AS(mc_estimate(g, g, 5, 5, 0.5, 10, 1), ValidationError);
    CHECK_THROWS_AS(quadrature_expectation(g, g, 5, 5, -1.0), ValidationError);
}

TEST_CASE("adaptive quadrature")
{
    const auto r = integrate_adaptive(
        [](double x) {
            Eigen::VectorXd v(2);
            v << std::sin(x), std::exp(-x * x);
            return v;
        },
        0.0, 3.0, 1e-10, 1e-14);
    CHECK(r.converged);
    CHECK(r.value[0] == doctest::Approx(1.0 - std::cos(3.0)).epsilon(1e-10));
    CHECK(r.value[1] == doctest::Approx(0.5 * std::sqrt(M_PI) * std::erf(3.0)).epsilon(1e-10));
}
