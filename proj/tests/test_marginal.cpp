#include <catch2/catch_amalgamated.hpp>

#include "specrisk/marginal.hpp"
#include "test_helpers.hpp"

using specrisk::Marginal;
using specrisk::wasserstein_1d;

TEST_CASE("discrete quantile is the generalized inverse", "[marginal]") {
    auto mu = Marginal::discrete({{1.0, 0.5}, {3.0, 0.5}});
    CHECK(mu.quantile(0.5) == 1.0);
    CHECK(mu.quantile(0.6) == 3.0);
    CHECK(mu.quantile(0.0) == 1.0);  // left endpoint of the support
    CHECK(mu.quantile(1.0) == 3.0);
}

TEST_CASE("discrete cdf is right-continuous", "[marginal]") {
    auto mu = Marginal::discrete({{1.0, 0.5}, {3.0, 0.5}});
    CHECK(mu.cdf(1.0) == 0.5);
    CHECK(mu.cdf(2.0) == 0.5);
    CHECK(mu.cdf(0.999) == 0.0);
    CHECK(mu.cdf(3.0) == 1.0);
    CHECK(mu.cdf(mu.hi()) == 1.0);
}

TEST_CASE("uniform quantile and cdf are the identity maps", "[marginal]") {
    auto u = Marginal::uniform(0.0, 1.0);
    CHECK(u.quantile(0.25) == Catch::Approx(0.25).margin(1e-11));
    CHECK(u.cdf(0.7) == Catch::Approx(0.7));
}

TEST_CASE("atoms at equal locations merge", "[marginal]") {
    auto mu = Marginal::discrete({{2.0, 0.25}, {2.0, 0.25}, {5.0, 0.5}});
    CHECK(mu.atom_count() == 2);
    CHECK(mu.atom_weights()[0] == Catch::Approx(0.5));
}

TEST_CASE("discrete construction validates weights", "[marginal]") {
    CHECK_THROWS_AS(Marginal::discrete({{0.0, 0.3}, {1.0, 0.3}}), specrisk::config_error);
    CHECK_THROWS_AS(Marginal::discrete({{0.0, -0.5}, {1.0, 1.5}}), specrisk::config_error);
}

TEST_CASE("quantile-cdf round trip at atom locations", "[marginal]") {
    auto gen = testutil::rng(17);
    auto mu = testutil::random_discrete(gen, 20);
    auto locs = mu.atom_locations();
    for (double x : locs) CHECK(mu.quantile(mu.cdf(x)) == x);
}

TEST_CASE("discretize places midpoint quantiles", "[marginal]") {
    auto d2 = Marginal::uniform(0.0, 1.0).discretized(2);
    REQUIRE(d2.atom_count() == 2);
    CHECK(d2.atom_locations()[0] == Catch::Approx(0.25).margin(1e-11));
    CHECK(d2.atom_locations()[1] == Catch::Approx(0.75).margin(1e-11));
    CHECK(d2.atom_weights()[0] == 0.5);

    auto d4 = Marginal::uniform(0.0, 2.0).discretized(4);
    REQUIRE(d4.atom_count() == 4);
    CHECK(d4.atom_locations()[0] == Catch::Approx(0.25).margin(1e-10));
    CHECK(d4.atom_locations()[3] == Catch::Approx(1.75).margin(1e-10));
}

TEST_CASE("discretize is a fixed point on uniform-weight discrete marginals", "[marginal]") {
    auto mu = Marginal::discrete({{0.0, 0.25}, {1.0, 0.25}, {4.0, 0.25}, {9.0, 0.25}});
    auto again = mu.discretized(4);
    REQUIRE(again.atom_count() == 4);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(again.atom_locations()[k] == mu.atom_locations()[k]);
}

TEST_CASE("wasserstein distance between Diracs", "[marginal]") {
    auto d0 = Marginal::discrete({{0.0, 1.0}});
    auto d1 = Marginal::discrete({{1.0, 1.0}});
    CHECK(wasserstein_1d(d0, d1, 2.0) == Catch::Approx(1.0));
    CHECK(wasserstein_1d(d0, d0, 2.0) == 0.0);
}

TEST_CASE("wasserstein distance between scaled uniforms", "[marginal]") {
    // int_0^1 |m - 2m| dm = 1/2
    CHECK(wasserstein_1d(Marginal::uniform(0, 1), Marginal::uniform(0, 2), 1.0) ==
          Catch::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("quantile/cdf Galois connection on a sampled grid", "[marginal]") {
    // F(x) >= m iff x >= Q(m); exact for discrete marginals because both
    // sides consult the same stored cumulative weights. m = 0 is excluded:
    // Q(0) is pinned to the support's left endpoint, not the literal -inf.
    auto gen = testutil::rng(3);
    auto mu = testutil::random_discrete(gen, 12, -2.0, 5.0);
    for (int i = 1; i <= 40; ++i) {
        const double m = i / 40.0;
        for (int j = 0; j <= 40; ++j) {
            const double x = -2.5 + 8.0 * j / 40.0;
            CHECK((mu.cdf(x) >= m) == (x >= mu.quantile(m)));
        }
    }
}

TEST_CASE("discretization error shrinks on a doubling schedule", "[marginal]") {
    for (auto mu : {Marginal::truncated_normal(0.0, 1.0, -6.0, 6.0),
                    Marginal::triangular(0.0, 0.3, 1.0),
                    Marginal::truncated_gumbel(0.0, 1.0, -4.0, 10.0)}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int n = 4; n <= 64; n *= 2) {
            const double err = wasserstein_1d(mu.discretized(n), mu, 1.0);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("wasserstein triangle inequality on random discrete triples", "[marginal]") {
    auto gen = testutil::rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        auto a = testutil::random_discrete(gen, 6, -1, 1);
        auto b = testutil::random_discrete(gen, 5, -1, 1);
        auto c = testutil::random_discrete(gen, 7, -1, 1);
        for (double p : {1.0, 2.0}) {
            const double ab = wasserstein_1d(a, b, p);
            const double bc = wasserstein_1d(b, c, p);
            const double ac = wasserstein_1d(a, c, p);
            CHECK(ac <= ab + bc + 1e-10);
        }
    }
}

TEST_CASE("parametric quantiles agree with their cdf", "[marginal]") {
    auto tn = Marginal::truncated_normal(30.0, 8.0, 15.0, 45.0);
    CHECK(tn.quantile(0.5) == Catch::Approx(30.0).margin(1e-9));  // symmetric truncation
    for (double m : {0.1, 0.37, 0.8, 0.99}) {
        const double x = tn.quantile(m);
        CHECK(tn.cdf(x) == Catch::Approx(m).margin(1e-9));
    }
    auto tri = Marginal::triangular(49.0, 50.0, 51.0);
    CHECK(tri.cdf(50.0) == Catch::Approx(0.5));
    CHECK(tri.quantile(0.5) == Catch::Approx(50.0).margin(1e-9));
}

TEST_CASE("piecewise-linear quantile handles jumps and flats", "[marginal]") {
    // atom of mass 1/2 at x = 1 (flat quantile), then linear to 2
    auto mu = Marginal::piecewise_linear_quantile({{0.0, 1.0}, {0.5, 1.0}, {1.0, 2.0}});
    CHECK(mu.quantile(0.25) == 1.0);
    CHECK(mu.quantile(0.75) == Catch::Approx(1.5));
    CHECK(mu.cdf(1.0) == Catch::Approx(0.5));
    CHECK(mu.cdf(1.5) == Catch::Approx(0.75));
}

TEST_CASE("shift moves support and quantiles together", "[marginal]") {
    auto gen = testutil::rng(5);
    auto mu = testutil::random_discrete(gen, 9);
    auto nu = mu.shifted(2.5);
    CHECK(nu.quantile(0.3) == Catch::Approx(mu.quantile(0.3) + 2.5));
    CHECK(wasserstein_1d(mu, nu, 1.0) == Catch::Approx(2.5).epsilon(1e-12));
    auto u = Marginal::uniform(0, 1).shifted(-1.0);
    CHECK(u.lo() == Catch::Approx(-1.0));
    CHECK(u.quantile(0.5) == Catch::Approx(-0.5).margin(1e-11));
}
