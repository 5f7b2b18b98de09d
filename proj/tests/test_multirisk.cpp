#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "specrisk/comonotone.hpp"
#include "specrisk/multirisk.hpp"
#include "test_helpers.hpp"

using namespace specrisk;

namespace {

VectorPayout vector_payout(const std::vector<std::string>& sources, int d, double lo, double hi) {
    std::vector<std::array<double, 2>> box(static_cast<std::size_t>(d), {lo, hi});
    VectorPayout vb;
    for (const auto& s : sources) vb.components.push_back(parse_payout(s, d, box));
    vb.validate();
    return vb;
}

PointCloud cloud(std::vector<std::vector<double>> pts, std::vector<double> w) {
    PointCloud c;
    c.points = std::move(pts);
    c.weights = std::move(w);
    c.validate();
    return c;
}

}  // namespace

TEST_CASE("dirac baseline reduces to a dot product with the mean", "[multirisk]") {
    auto nu = cloud({{2.0, -1.0}}, {1.0});
    auto eta = cloud({{1.0, 0.0}, {0.0, 2.0}, {3.0, 1.0}}, {0.25, 0.25, 0.5});
    const auto mean = eta.mean();
    CHECK(maximal_correlation_risk(nu, eta) ==
          Catch::Approx(2.0 * mean[0] - 1.0 * mean[1]).margin(1e-12));
}

TEST_CASE("one-dimensional clouds reduce to the scalar LP route", "[multirisk]") {
    auto gen = testutil::rng(71);
    auto alpha = testutil::random_pc_alpha(gen, 3);
    auto mu = testutil::random_discrete(gen, 8, -1, 1);
    auto sm = spectral_measure(alpha);
    PointCloud nu, eta;
    for (std::size_t k = 0; k < sm.measure.atom_count(); ++k) {
        nu.points.push_back({sm.measure.atom_locations()[k]});
        nu.weights.push_back(sm.measure.atom_weights()[k]);
    }
    for (std::size_t k = 0; k < mu.atom_count(); ++k) {
        eta.points.push_back({mu.atom_locations()[k]});
        eta.weights.push_back(mu.atom_weights()[k]);
    }
    CHECK(maximal_correlation_risk(nu, eta) ==
          Catch::Approx(risk_via_ot(alpha, mu)).margin(1e-10));
}

TEST_CASE("2x2 clouds match Birkhoff vertex enumeration", "[multirisk]") {
    auto nu = cloud({{0.0, 1.0}, {2.0, 0.5}}, {0.5, 0.5});
    auto eta = cloud({{1.0, 1.0}, {-1.0, 2.0}}, {0.5, 0.5});
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        return a[0] * b[0] + a[1] * b[1];
    };
    const double diag = 0.5 * dot(nu.points[0], eta.points[0]) + 0.5 * dot(nu.points[1], eta.points[1]);
    const double anti = 0.5 * dot(nu.points[0], eta.points[1]) + 0.5 * dot(nu.points[1], eta.points[0]);
    CHECK(maximal_correlation_risk(nu, eta) == Catch::Approx(std::max(diag, anti)).margin(1e-12));
}

TEST_CASE("simultaneous rotation of both clouds preserves the value", "[multirisk]") {
    auto gen = testutil::rng(72);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    PointCloud nu, eta;
    for (int k = 0; k < 4; ++k) {
        nu.points.push_back({unif(gen), unif(gen)});
        nu.weights.push_back(0.25);
        eta.points.push_back({unif(gen), unif(gen)});
        eta.weights.push_back(0.25);
    }
    const double theta = 0.7;
    auto rotate = [&](const PointCloud& c) {
        PointCloud r = c;
        for (auto& p : r.points) {
            const double x = p[0] * std::cos(theta) - p[1] * std::sin(theta);
            const double y = p[0] * std::sin(theta) + p[1] * std::cos(theta);
            p = {x, y};
        }
        return r;
    };
    CHECK(maximal_correlation_risk(rotate(nu), rotate(eta)) ==
          Catch::Approx(maximal_correlation_risk(nu, eta)).margin(1e-10));
}

TEST_CASE("scalar collapse: a one-component curve is the scalar theory", "[multirisk]") {
    auto gen = testutil::rng(73);
    std::vector<Marginal> ms = {testutil::random_discrete(gen, 7, 0.1, 1.0),
                                testutil::random_discrete(gen, 6, 0.1, 1.0)};
    auto alpha = testutil::random_pc_alpha(gen, 4);
    Curve f;
    f.components = {alpha};
    auto vb = vector_payout({"x1*x2 + x1"}, 2, 0.0, 1.0);
    auto curve_sol = solve_curve_case(f, vb, ms);
    std::vector<std::array<double, 2>> box(2, {0.0, 1.0});
    auto scalar = solve_compatible(alpha, parse_payout("x1*x2 + x1", 2, box), ms);
    CHECK(curve_sol.value == Catch::Approx(scalar.value).margin(1e-10));
}

TEST_CASE("coordinate payouts against a flat curve sum the means", "[multirisk]") {
    auto gen = testutil::rng(74);
    std::vector<Marginal> ms = {testutil::random_discrete(gen, 5, 0.1, 1.0),
                                testutil::random_discrete(gen, 5, 0.1, 1.0)};
    Curve f;
    f.components = {SpectralFunction::constant(1.0), SpectralFunction::constant(1.0)};
    auto vb = vector_payout({"x1", "x2"}, 2, 0.0, 1.0);
    auto sol = solve_curve_case(f, vb, ms);
    CHECK(sol.value == Catch::Approx(ms[0].mean() + ms[1].mean()).margin(1e-10));
}

TEST_CASE("curve case matches the lifted LP oracle", "[multirisk]") {
    auto gen = testutil::rng(75);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<Marginal> ms = {testutil::random_discrete(gen, 5, 0.1, 1.0),
                                    testutil::random_discrete(gen, 4, 0.1, 1.0)};
        Curve f;
        f.components = {testutil::random_pc_alpha(gen, 3), testutil::random_pc_alpha(gen, 2)};
        auto vb = vector_payout({"x1*x2", "x1 + x2"}, 2, 0.0, 1.0);
        auto sol = solve_curve_case(f, vb, ms);
        auto lp = solve_curve_lifted_lp(f, vb, ms);
        REQUIRE(lp.status == LpStatus::optimal);
        CHECK(sol.value == Catch::Approx(lp.value).margin(1e-8));
    }
}

TEST_CASE("curve hypotheses are enforced", "[multirisk]") {
    std::vector<Marginal> ms = {Marginal::uniform(0, 1), Marginal::uniform(0, 1)};
    Curve f;
    f.components = {SpectralFunction::constant(1.0)};
    auto decreasing = vector_payout({"0 - x1 - x2"}, 2, 0.0, 1.0);
    CHECK_THROWS_AS(solve_curve_case(f, decreasing, ms), hypothesis_error);
    auto submodular = vector_payout({"0 - x1*x2 + x1 + x2"}, 2, 0.0, 1.0);
    CHECK_THROWS_AS(solve_curve_case(f, submodular, ms), hypothesis_error);
}

TEST_CASE("invertibility probe on reference maps", "[multirisk]") {
    auto ident = vector_payout({"x1", "x2"}, 2, 0.0, 1.0);
    auto rid = invertibility_probe(ident);
    CHECK(rid.min_abs_det == Catch::Approx(1.0).epsilon(1e-8));
    CHECK(rid.flagged == 0);

    auto collapsed = vector_payout({"x1 + x2", "x1 + x2"}, 2, 0.0, 1.0);
    auto rc = invertibility_probe(collapsed);
    CHECK(rc.min_abs_det == Catch::Approx(0.0).margin(1e-12));
    CHECK(rc.flagged == rc.total_points);

    auto tw = vector_payout({"x1", "x1*x2"}, 2, 1.0, 2.0);
    auto rt = invertibility_probe(tw);
    // hand Jacobian: det = x1 >= 1 on the box
    CHECK(rt.min_abs_det >= 1.0 - 1e-8);
    CHECK(rt.flagged == 0);
}
