// Acceptance suite: runs every criterion end to end and prints one
// [PASS]/[FAIL] line each. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specrisk/specrisk.hpp"
#include "test_helpers.hpp"

using namespace specrisk;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
    std::string label;
    bool ok = true;
    std::string detail;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    explicit Criterion(std::string l) : label(std::move(l)) {}

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    ~Criterion() {
        const double t = seconds();
        if (ok) {
            std::printf("[PASS] %s (%.2f s)\n", label.c_str(), t);
        } else {
            std::printf("[FAIL] %s (%.2f s): %s\n", label.c_str(), t, detail.c_str());
            ++g_failures;
        }
        std::fflush(stdout);
    }
};

Payout make_box_payout(const std::string& src, int d, double lo, double hi) {
    std::vector<std::array<double, 2>> box(static_cast<std::size_t>(d), {lo, hi});
    return parse_payout(src, d, box);
}

std::string sum_expr(int d) {
    std::string s = "x1";
    for (int i = 2; i <= d; ++i) s += " + x" + std::to_string(i);
    return s;
}

std::string product_expr(int d) {
    std::string s = "x1";
    for (int i = 2; i <= d; ++i) s += "*x" + std::to_string(i);
    return s;
}

std::string basket_expr(int d, double strike) {
    return "max(" + sum_expr(d) + " - " + std::to_string(strike) + ", 0)";
}

std::string quad_expr(int d) {
    std::string s;
    for (int i = 1; i <= d; ++i)
        for (int j = i + 1; j <= d; ++j)
            s += " - (x" + std::to_string(i) + " - x" + std::to_string(j) + ")^2";
    return "0" + s;
}

void criterion_1_additivity() {
    Criterion c("criterion 1: additivity of the sum payout across marginals");
    auto gen = testutil::rng(101);
    const std::vector<SpectralFunction> alphas = {expected_shortfall_alpha(0.1),
                                                  expected_shortfall_alpha(0.5),
                                                  SpectralFunction::constant(1.0)};
    for (const auto& alpha : alphas) {
        std::vector<Marginal> ms;
        for (int i = 0; i < 3; ++i) ms.push_back(testutil::random_discrete(gen, 50, -1.0, 2.0));
        auto b = make_box_payout(sum_expr(3), 3, -1.0, 2.0);
        const double lhs = solve_compatible(alpha, b, ms).value;
        double rhs = 0.0;
        for (const auto& mu : ms) rhs += spectral_risk(alpha, mu);
        c.require(std::abs(lhs - rhs) <= 1e-9,
                  "solve_compatible deviates from the per-marginal sum by " +
                      std::to_string(std::abs(lhs - rhs)));
    }
    c.require(c.seconds() < 1.0, "runtime exceeded 1 s");
}

void criterion_2_closed_form_vs_lp() {
    Criterion c("criterion 2: closed form equals the lifted LP on random instances");
    auto gen = testutil::rng(202);
    const std::vector<SpectralFunction> alphas = {
        expected_shortfall_alpha(0.25), expected_shortfall_alpha(0.5),
        SpectralFunction::constant(1.0),
        SpectralFunction::piecewise_constant({{0.0, 0.4}, {0.6, 1.9}})};

    int instances = 0;
    for (int round = 0; instances < 20; ++round) {
        const int d = 2 + (round % 2);
        const int family = round % 4;
        const auto& alpha = alphas[static_cast<std::size_t>((round / 2) % 4)];
        // the quadratic payout is non-monotone, hence only admissible for a
        // constant spectral function
        if (family == 3 && !alpha.is_constant()) continue;

        std::vector<Marginal> ms;
        for (int i = 0; i < d; ++i)
            ms.push_back(testutil::random_discrete(gen, 3 + static_cast<int>(gen() % 4), 0.1, 1.0));
        Payout b = [&] {
            switch (family) {
                case 0: return make_box_payout(sum_expr(d), d, 0.0, 1.0);
                case 1: return make_box_payout(product_expr(d), d, 0.0, 1.0);
                case 2: return make_box_payout(basket_expr(d, 0.55 * d), d, 0.0, 1.0);
                default: return make_box_payout(quad_expr(d), d, 0.0, 1.0);
            }
        }();

        auto sol = solve_compatible(alpha, b, ms);
        auto lp = solve_lifted_lp(alpha, b, ms);
        c.require(lp.status == LpStatus::optimal, "LP did not reach optimality");
        c.require(std::abs(sol.value - lp.value) <= 1e-8,
                  "closed form vs LP gap " + std::to_string(std::abs(sol.value - lp.value)));

        if (family == 1) {  // strictly compatible: probe the optimal plan's structure
            std::vector<Marginal> axes = {spectral_measure(alpha).measure};
            for (const auto& mu : ms) axes.push_back(mu);
            c.require(monotone_support_check(lp.plan, axes, b).monotone,
                      "LP plan support is not monotone for a strictly compatible payout");
        }
        ++instances;
    }
    c.require(c.seconds() < 30.0, "runtime exceeded 30 s");
}

void criterion_3_es_three_way() {
    Criterion c("criterion 3: expected-shortfall three-way equivalence");
    auto gen = testutil::rng(303);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 2 + (trial % 2);
        std::vector<Marginal> ms;
        for (int i = 0; i < d; ++i)
            ms.push_back(testutil::random_discrete(gen, 3 + static_cast<int>(gen() % 3), 0.1, 1.0));
        const double m0 = 0.15 + 0.7 * static_cast<double>(gen() % 100) / 100.0;
        Payout b = (trial % 3 == 0)   ? make_box_payout(sum_expr(d), d, 0.0, 1.0)
                   : (trial % 3 == 1) ? make_box_payout(product_expr(d), d, 0.0, 1.0)
                                      : make_box_payout(basket_expr(d, 0.5 * d), d, 0.0, 1.0);
        auto alpha = expected_shortfall_alpha(m0);
        const double partial = partial_transport_value(m0, b, ms).value;
        const double lifted = solve_lifted_lp(alpha, b, ms).value;
        const double closed = solve_compatible(alpha, b, ms).value;
        c.require(std::abs(partial - lifted) <= 1e-9,
                  "partial vs lifted gap " + std::to_string(std::abs(partial - lifted)));
        c.require(std::abs(lifted - closed) <= 1e-9,
                  "lifted vs closed-form gap " + std::to_string(std::abs(lifted - closed)));
        c.require(std::abs(partial - closed) <= 1e-9,
                  "partial vs closed-form gap " + std::to_string(std::abs(partial - closed)));
    }
}

void criterion_4_variational_formula() {
    Criterion c("criterion 4: spectral risk equals its optimal-transport value");
    auto gen = testutil::rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        auto mu = testutil::random_discrete(gen, 5 + static_cast<int>(gen() % 26), -2.0, 2.0);
        SpectralFunction alpha =
            (trial % 5 == 0) ? expected_shortfall_alpha(0.05 + 0.9 * (trial / 50.0))
                             : testutil::random_pc_alpha(gen, 1 + static_cast<int>(gen() % 6));
        const double direct = spectral_risk(alpha, mu);
        const double via_ot = risk_via_ot(alpha, mu);
        c.require(std::abs(direct - via_ot) <= 1e-9,
                  "gap " + std::to_string(std::abs(direct - via_ot)));
    }
}

void criterion_5_concavity() {
    Criterion c("criterion 5: concavity of the risk in the measure");
    auto gen = testutil::rng(505);
    std::uniform_real_distribution<double> ut(0.05, 0.95);
    for (int trial = 0; trial < 100; ++trial) {
        auto mu0 = testutil::random_discrete(gen, 4 + static_cast<int>(gen() % 10), -1.0, 1.0);
        auto mu1 = testutil::random_discrete(gen, 4 + static_cast<int>(gen() % 10), -1.0, 1.0);
        auto alpha = testutil::random_pc_alpha(gen, 1 + static_cast<int>(gen() % 4));
        const double t = ut(gen);
        std::vector<std::pair<double, double>> mix;
        for (std::size_t k = 0; k < mu0.atom_count(); ++k)
            mix.emplace_back(mu0.atom_locations()[k], (1 - t) * mu0.atom_weights()[k]);
        for (std::size_t k = 0; k < mu1.atom_count(); ++k)
            mix.emplace_back(mu1.atom_locations()[k], t * mu1.atom_weights()[k]);
        const double lhs = spectral_risk(alpha, Marginal::discrete(std::move(mix)));
        const double rhs = (1 - t) * spectral_risk(alpha, mu0) + t * spectral_risk(alpha, mu1);
        c.require(lhs >= rhs - 1e-10,
                  "mixture inequality violated by " + std::to_string(rhs - lhs));
    }
}

void criterion_6_lipschitz_lemma() {
    Criterion c("criterion 6: risk gap bounded by alpha(1) times the Wasserstein distance");
    auto gen = testutil::rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        auto mu = testutil::random_discrete(gen, 4 + static_cast<int>(gen() % 12), -2.0, 2.0);
        auto nu = testutil::random_discrete(gen, 4 + static_cast<int>(gen() % 12), -2.0, 2.0);
        auto alpha = testutil::random_pc_alpha(gen, 1 + static_cast<int>(gen() % 5));
        const double gap = std::abs(spectral_risk(alpha, mu) - spectral_risk(alpha, nu));
        for (double p : {1.0, 2.0}) {
            const double bound = alpha.bound() * wasserstein_1d(mu, nu, p);
            c.require(gap <= bound + 1e-10,
                      "p=" + std::to_string(p) + " excess " + std::to_string(gap - bound));
        }
    }
}

void criterion_7_stability_bound() {
    Criterion c("criterion 7: perturbation experiments respect the proof-form bound");
    std::vector<Marginal> uniforms = {Marginal::uniform(0, 1), Marginal::uniform(0, 1),
                                      Marginal::uniform(0, 1)};
    auto b = make_box_payout(sum_expr(3), 3, 0.0, 1.0);

    Perturbation jitter;
    jitter.kind = Perturbation::Kind::atom_jitter;
    jitter.jitter_sigma = 0.02;
    auto rep = perturbation_experiment(expected_shortfall_alpha(0.25), b, uniforms, jitter,
                                       /*trials=*/100, /*p=*/1.0, /*seed=*/707);
    c.require(rep.satisfied, "a jitter trial exceeded its bound");
    c.require(static_cast<int>(rep.trial_log.size()) == 100, "expected 100 trials");

    Perturbation shift;
    shift.kind = Perturbation::Kind::shift;
    shift.shift_delta = 0.05;
    auto tight = perturbation_experiment(SpectralFunction::constant(1.0), b, uniforms, shift,
                                         /*trials=*/1, /*p=*/1.0, /*seed=*/707, /*known_K=*/1.0);
    c.require(std::abs(tight.worst_ratio - 1.0) <= 1e-9,
              "shift ratio " + std::to_string(tight.worst_ratio));
}

void criterion_8_river() {
    Criterion c("criterion 8: river example classification and monotone table");
#ifndef SPECRISK_CLI_PATH
    c.require(false, "CLI path not configured");
#else
    const fs::path dir = fs::temp_directory_path() / "specrisk_acceptance_river";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cmd = std::string(SPECRISK_CLI_PATH) + " river --out " + dir.string() +
                            " > " + (dir / "stdout.txt").string() + " 2>" +
                            (dir / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    c.require(rc == 0, "river command exited with " + std::to_string(rc));

    std::ifstream rep_in(dir / "report.json");
    c.require(static_cast<bool>(rep_in), "river report missing");
    if (rep_in) {
        nlohmann::json rep;
        rep_in >> rep;
        const auto& comp = rep["compatibility"];
        auto is_increasing = [&](const std::string& v) {
            const std::string m = comp["monotonicity"][v];
            return m == "increasing" || m == "strict-increasing";
        };
        auto is_decreasing = [&](const std::string& v) {
            const std::string m = comp["monotonicity"][v];
            return m == "decreasing" || m == "strict-decreasing";
        };
        for (const char* v : {"Z_v", "Q", "L"})
            c.require(is_increasing(v), std::string(v) + " not classified increasing");
        for (const char* v : {"K_s", "Z_m", "H_d", "C_b", "B"})
            c.require(is_decreasing(v), std::string(v) + " not classified decreasing");
        c.require(rep["compatibility"]["verdict"] != "Incompatible", "river marked incompatible");
    }

    std::ifstream table(dir / "river_table.csv");
    c.require(static_cast<bool>(table), "river table missing");
    if (table) {
        std::string line;
        std::getline(table, line);  // header
        double prev_s = -std::numeric_limits<double>::infinity();
        int rows = 0;
        while (std::getline(table, line)) {
            const auto pos = line.find_last_of(',');
            const double s = std::stod(line.substr(pos + 1));
            c.require(s >= prev_s - 1e-9, "S column decreases at row " + std::to_string(rows));
            prev_s = s;
            ++rows;
        }
        c.require(rows >= 100, "river table unexpectedly short");
    }
    fs::remove_all(dir);
#endif
}

void criterion_9_multirisk_curve() {
    Criterion c("criterion 9: curve-case closed form equals its lifted LP");
    auto gen = testutil::rng(909);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Marginal> ms = {
            testutil::random_discrete(gen, 3 + static_cast<int>(gen() % 4), 0.1, 1.0),
            testutil::random_discrete(gen, 3 + static_cast<int>(gen() % 4), 0.1, 1.0)};
        VectorPayout vb;
        std::vector<std::array<double, 2>> box(2, {0.0, 1.0});
        vb.components.push_back(parse_payout("x1*x2", 2, box));
        vb.components.push_back(parse_payout("x1 + x2", 2, box));
        Curve f;
        f.components = {testutil::random_pc_alpha(gen, 1 + static_cast<int>(gen() % 3)),
                        testutil::random_pc_alpha(gen, 1 + static_cast<int>(gen() % 3))};
        auto sol = solve_curve_case(f, vb, ms);
        auto lp = solve_curve_lifted_lp(f, vb, ms);
        c.require(lp.status == LpStatus::optimal, "curve LP did not reach optimality");
        c.require(std::abs(sol.value - lp.value) <= 1e-8,
                  "curve gap " + std::to_string(std::abs(sol.value - lp.value)));
    }
    // scalar collapse: a single-component curve must reproduce the scalar theory
    auto gen2 = testutil::rng(910);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Marginal> ms = {testutil::random_discrete(gen2, 5, 0.1, 1.0),
                                    testutil::random_discrete(gen2, 5, 0.1, 1.0)};
        auto alpha = testutil::random_pc_alpha(gen2, 3);
        VectorPayout vb;
        std::vector<std::array<double, 2>> box(2, {0.0, 1.0});
        vb.components.push_back(parse_payout("x1*x2 + x1", 2, box));
        Curve f;
        f.components = {alpha};
        const double collapsed = solve_curve_case(f, vb, ms).value;
        const double scalar = solve_compatible(alpha, parse_payout("x1*x2 + x1", 2, box), ms).value;
        c.require(std::abs(collapsed - scalar) <= 1e-10,
                  "scalar collapse gap " + std::to_string(std::abs(collapsed - scalar)));
    }
}

void criterion_10_entropic() {
    Criterion c("criterion 10: entropic value within 1% of the LP on 3x3x3 instances");
    auto gen = testutil::rng(1010);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<Marginal> ms = {testutil::random_discrete(gen, 3, 0.2, 1.0),
                                    testutil::random_discrete(gen, 3, 0.2, 1.0),
                                    testutil::random_discrete(gen, 3, 0.2, 1.0)};
        auto surplus = [](std::span<const double> x) {
            return x[0] * x[1] + x[1] * x[2] + x[0] * x[2];
        };
        double scale = 0.0;
        for (const auto& mu : ms) scale = std::max(scale, std::abs(mu.hi()));
        const double lp = solve_mmot_lp(ms, surplus).value;
        auto ent = solve_mmot_entropic(ms, surplus, 1e-3 * 3.0 * scale * scale);
        c.require(std::abs(ent.value - lp) <= 0.01 * std::abs(lp),
                  "entropic gap " + std::to_string(std::abs(ent.value - lp)) + " vs lp " +
                      std::to_string(lp));
    }
}

void criterion_11_condition_checkers() {
    Criterion c("criterion 11: condition checkers match hand-computed reference signs");
    // D2 b . [D12 b]^{-1} D1 b = x1*x2 > 0 on a positive box
    auto pass = twist_condition_check(make_box_payout("x1*x2", 2, 0.05, 1.0), 1);
    c.require(pass.fraction_pass() == 1.0 && pass.worst_value > 0.0,
              "product surplus should pass everywhere");
    // D12 b = 1, form = -(x1-x2)^2 <= 0
    auto fail = twist_condition_check(make_box_payout("-(x1 - x2)^2/2", 2, 0.0, 1.0), 1);
    c.require(fail.fraction_pass() < 1.0 && fail.worst_value <= 0.0,
              "negative-quadratic surplus should fail off the diagonal");
    // D12 b = 0: degenerate
    auto degen = twist_condition_check(make_box_payout("x1 + x2", 2, 0.0, 1.0), 1);
    c.require(degen.degenerate, "additive surplus should be degenerate");

    VectorPayout ident;
    {
        std::vector<std::array<double, 2>> box(2, {0.0, 1.0});
        ident.components.push_back(parse_payout("x1", 2, box));
        ident.components.push_back(parse_payout("x2", 2, box));
    }
    auto rid = invertibility_probe(ident);
    c.require(std::abs(rid.min_abs_det - 1.0) <= 1e-8 && rid.flagged == 0,
              "identity Jacobian should have unit determinant");

    VectorPayout collapsed;
    {
        std::vector<std::array<double, 2>> box(2, {0.0, 1.0});
        collapsed.components.push_back(parse_payout("x1 + x2", 2, box));
        collapsed.components.push_back(parse_payout("x1 + x2", 2, box));
    }
    auto rc = invertibility_probe(collapsed);
    c.require(rc.flagged == rc.total_points, "rank-one Jacobian should be flagged everywhere");
}

}  // namespace

int main() {
    std::printf("specrisk acceptance suite\n");
    criterion_1_additivity();
    criterion_2_closed_form_vs_lp();
    criterion_3_es_three_way();
    criterion_4_variational_formula();
    criterion_5_concavity();
    criterion_6_lipschitz_lemma();
    criterion_7_stability_bound();
    criterion_8_river();
    criterion_9_multirisk_curve();
    criterion_10_entropic();
    criterion_11_condition_checkers();
    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
