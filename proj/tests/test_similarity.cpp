#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tm3/error.hpp"
#include "tm3/similarity.hpp"

using namespace tm3;

namespace {

RowMatrixXd random_set(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    RowMatrixXd m(n, d);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    return m;
}

PatchSet as_set(const RowMatrixXd& m) { return PatchSet{m}; }

RowMatrixXd column(std::initializer_list<double> v)
{
    RowMatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index k = 0;
    for (double x : v) m(k++, 0) = x;
    return m;
}

}  // namespace

TEST_CASE("rank pairs: hand example")
{
    const auto P = column({0.0, 1.0});
    const auto Q = column({0.1, 5.0});
    const auto pairs = reciprocal_rank_pairs(P, Q, SimilarityConfig{});
    const RankPairList expected{{0, 0, 1, 1}, {0, 1, 2, 2}, {1, 0, 1, 2}, {1, 1, 2, 1}};
    CHECK(pairs == expected);
    CHECK(mbs(P, Q, SimilarityConfig{}) ==
          doctest::Approx(0.5 * (std::exp(-2.0) + std::exp(-8.0) + 2.0 * std::exp(-4.0))));
    CHECK(mbs(P, Q, SimilarityConfig{}) == doctest::Approx(0.08615).epsilon(1e-4));
    CHECK(bbs(P, Q) == doctest::Approx(0.5));
}

TEST_CASE("rank pairs: self match")
{
    std::mt19937_64 rng(3);
    const auto P = random_set(30, 4, rng);
    const auto pairs = reciprocal_rank_pairs(P, P, SimilarityConfig{});
    int diag = 0;
    for (const auto& p : pairs)
        if (p.i == p.j) {
            CHECK(p.r == 1);
            CHECK(p.s == 1);
            ++diag;
        }
    CHECK(diag == 30);
    CHECK(bbs(P, P) == 1.0);
    CHECK(mbs(P, P, SimilarityConfig{}) >= std::exp(-2.0));
}

TEST_CASE("rank pairs match the exhaustive oracle")
{
    std::mt19937_64 rng(17);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index m = 5 + static_cast<Eigen::Index>(rng() % 40);
        const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng() % 40);
        const auto P = random_set(m, 5, rng), Q = random_set(n, 5, rng);
        for (int cap : {1, 2, 4, 7}) {
            const SimilarityConfig cfg{0.5, cap};
            const auto got = reciprocal_rank_pairs(P, Q, cfg);
            const auto want = oracle::rank_pairs(P, Q, cap);
            REQUIRE(got == want);
            for (const auto& p : got) {
                CHECK(p.r >= 1);
                CHECK(p.r <= cap);
                CHECK(p.s >= 1);
                CHECK(p.s <= cap);
            }
        }
    }
}

TEST_CASE("ties resolve to the lower index")
{
    // q0 and q1 are equidistant from p0
    const auto P = column({0.0});
    const auto Q = column({-1.0, 1.0});
    const auto pairs = reciprocal_rank_pairs(P, Q, SimilarityConfig{0.5, 4});
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == RankPair{0, 0, 1, 1});
    CHECK(pairs[1] == RankPair{0, 1, 2, 1});
}

TEST_CASE("nearest rows agree with a full scan")
{
    std::mt19937_64 rng(23);
    for (int t = 0; t < 20; ++t) {
        const auto Q = random_set(60, 27, rng), R = random_set(90, 27, rng);
        const auto got = nearest_rows(Q, R, 4);
        const auto D = pairwise_squared_distances(Q, R);
        for (Eigen::Index i = 0; i < Q.rows(); ++i) {
            std::vector<Neighbor> all;
            for (Eigen::Index j = 0; j < R.rows(); ++j) all.push_back({D(i, j), j});
            std::sort(all.begin(), all.end());
            all.resize(4);
            const auto& g = got[static_cast<std::size_t>(i)];
            REQUIRE(g.size() == 4);
            for (std::size_t k = 0; k < 4; ++k) CHECK(g[k].index == all[k].index);
        }
    }
}

TEST_CASE("pairwise distances equal squared_distance bit for bit")
{
    std::mt19937_64 rng(5);
    const auto P = random_set(13, 27, rng), Q = random_set(11, 27, rng);
    const auto D = pairwise_squared_distances(P, Q);
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < Q.rows(); ++j) CHECK(D(i, j) == squared_distance(P.row(i), Q.row(j)));
}

TEST_CASE("mbp")
{
    const SimilarityConfig cfg{0.5, 4};
    CHECK(mbp(1, 1, cfg) == doctest::Approx(0.135335).epsilon(1e-5));
    CHECK(mbp(2, 3, cfg) == doctest::Approx(std::exp(-12.0)));
    CHECK(mbp(5, 1, cfg) == 0.0);
    CHECK(mbp(1, 5, cfg) == 0.0);
    CHECK_THROWS_AS(mbp(0, 1, cfg), ValidationError);
}

TEST_CASE("mbs matches the oracle and its bounds")
{
    std::mt19937_64 rng(29);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 20);
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 20);
        const auto P = random_set(m, 3, rng), Q = random_set(n, 3, rng);
        const double got = mbs(P, Q, SimilarityConfig{});
        CHECK(got == doctest::Approx(oracle::mbs(P, Q, 0.5, 4)).epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 16.0);
    }
}

TEST_CASE("mbs is symmetric for equal sizes")
{
    std::mt19937_64 rng(31);
    for (int t = 0; t < 50; ++t) {
        const auto P = random_set(15, 3, rng), Q = random_set(15, 3, rng);
        CHECK(mbs(P, Q, SimilarityConfig{}) == doctest::Approx(mbs(Q, P, SimilarityConfig{})).epsilon(1e-12));
    }
}

TEST_CASE("bbs is quantized")
{
    std::mt19937_64 rng(37);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 20);
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 20);
        const auto P = random_set(m, 2, rng), Q = random_set(n, 2, rng);
        const double k = bbs(P, Q) * static_cast<double>(std::min(m, n));
        CHECK(k == doctest::Approx(std::round(k)));
        CHECK(std::round(k) >= 1.0);
        CHECK(bbs(P, Q) == doctest::Approx(oracle::bbs(P, Q)));
    }
}

TEST_CASE("cap 1 reduces mbs to scaled bbs")
{
    std::mt19937_64 rng(41);
    for (int t = 0; t < 50; ++t) {
        const auto P = random_set(12, 3, rng), Q = random_set(12, 3, rng);
        const SimilarityConfig cfg{0.5, 1};
        CHECK(mbs(P, Q, cfg) == doctest::Approx(std::exp(-2.0) * bbs(P, Q)));
        CHECK(mbs_normalized(as_set(P), as_set(Q), cfg) == doctest::Approx(bbs(P, Q)));
    }
}

TEST_CASE("dimension mismatch and empty sets")
{
    std::mt19937_64 rng(1);
    const auto P = random_set(4, 3, rng), Q = random_set(4, 2, rng);
    CHECK_THROWS_AS(mbs(P, Q, SimilarityConfig{}), ValidationError);
    CHECK_THROWS_AS(bbs(P, Q), ValidationError);
    CHECK_THROWS_AS(mbs(RowMatrixXd(0, 3), P, SimilarityConfig{}), ValidationError);
}

TEST_CASE("batch scoring")
{
    std::mt19937_64 rng(43);
    const auto tmpl = as_set(random_set(20, 3, rng));
    std::vector<PatchSet> cands;
    for (int k = 0; k < 6; ++k) {
        RowMatrixXd far = random_set(20, 3, rng);
        far.array() += 50.0;
        cands.push_back(as_set(far));
    }
    cands.insert(cands.begin() + 3, tmpl);
    const auto res = batch_score(cands, tmpl, SimilarityConfig{});
    CHECK(res.best == 3);
    REQUIRE(res.scores.size() == cands.size());
    for (std::size_t k = 0; k < cands.size(); ++k) CHECK(res.scores[k] == mbs(cands[k], tmpl, SimilarityConfig{}));

    const std::vector<PatchSet> one{cands[0]};
    CHECK(batch_score(one, tmpl, SimilarityConfig{}).best == 0);

    const std::vector<double> tied{1.0, 3.0, 3.0, 2.0};
    CHECK(argmax_first(tied) == 1);
}

TEST_CASE("mbs spreads scores more than bbs")
{
    std::mt19937_64 rng(47);
    const auto tmpl = random_set(16, 2, rng);
    std::set<double> m_vals, b_vals;
    for (int k = 0; k < 100; ++k) {
        const auto c = random_set(16, 2, rng);
        m_vals.insert(mbs(c, tmpl, SimilarityConfig{}));
        b_vals.insert(bbs(c, tmpl));
    }
    CHECK(b_vals.size() <= 17);
    CHECK(m_vals.size() > b_vals.size());
}

TEST_CASE("rank pair search grows slower than quadratic")
{
    // one pass over the dense distance matrix plus top-c upkeep
    std::mt19937_64 rng(53);
    const auto time_it = [&](Eigen::Index m) {
        const auto P = random_set(m, 27, rng), Q = random_set(m, 27, rng);
        const auto t0 = std::chrono::steady_clock::now();
        for (int k = 0; k < 3; ++k) (void)reciprocal_rank_pairs(P, Q, SimilarityConfig{});
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    time_it(144);
    const double small = time_it(144), large = time_it(576);
    MESSAGE("M=144: " << small << " s, M=576: " << large << " s");
    // the distance matrix itself is M^2 d; only check that there is no extra factor of M
    CHECK(large / small < 16.0 * 1.5);
}
