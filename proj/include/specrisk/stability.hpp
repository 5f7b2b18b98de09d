#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "specrisk/comonotone.hpp"
#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/payout.hpp"
#include "specrisk/spectral.hpp"

namespace specrisk {

/// Quantitative bound on the optimal value's movement under marginal
/// perturbations. The paper's statement and its proof display two different
/// expressions for p > 1; both are computed, and the proof-form bound
/// M K (sum_i W_p^p)^{1/p} is the one asserted.
struct LipschitzBound {
    double proof_form = 0.0;      // M * K * (sum_i W_p(mu_i, nu_i)^p)^{1/p}
    double statement_form = 0.0;  // M * K * (sum_i W_p(mu_i, nu_i))^{1/p}
};

inline LipschitzBound lipschitz_bound(double K, double M, const std::vector<double>& wp_list,
                                      double p) {
    if (!(K > 0.0) || !(M > 0.0)) throw config_error("lipschitz_bound requires K, M > 0");
    if (!(p >= 1.0)) throw config_error("lipschitz_bound requires p >= 1");
    double sum_pow = 0.0, sum_lin = 0.0;
    for (double w : wp_list) {
        if (w < 0.0) throw config_error("Wasserstein distances must be nonnegative");
        sum_pow += std::pow(w, p);
        sum_lin += w;
    }
    return {M * K * std::pow(sum_pow, 1.0 / p), M * K * std::pow(sum_lin, 1.0 / p)};
}

/// sup over the probe grid of the q-norm of the finite-difference gradient,
/// q conjugate to p (the Lipschitz constant of b w.r.t. the p-norm).
inline double estimate_lipschitz_constant(const Payout& b, double p, int grid_per_axis = 0) {
    const int d = b.arity();
    if (grid_per_axis == 0) grid_per_axis = default_grid_per_axis(d);
    const auto grid = detail::probe_grid(b, grid_per_axis);
    std::vector<double> h(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const auto& [lo, hi] = b.domain()[static_cast<std::size_t>(i)];
        h[static_cast<std::size_t>(i)] = (hi - lo) / (4.0 * grid_per_axis);
    }
    const double q = (p == 1.0) ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
    double K = 0.0;
    std::vector<double> xp, xm;
    for (const auto& x : grid) {
        double norm_q = 0.0, norm_inf = 0.0;
        for (int i = 0; i < d; ++i) {
            if (h[static_cast<std::size_t>(i)] == 0.0) continue;
            xp = x;
            xm = x;
            xp[static_cast<std::size_t>(i)] += h[static_cast<std::size_t>(i)];
            xm[static_cast<std::size_t>(i)] -= h[static_cast<std::size_t>(i)];
            const double gi = std::abs((detail::guarded_eval(b, xp) - detail::guarded_eval(b, xm)) /
                                       (2.0 * h[static_cast<std::size_t>(i)]));
            norm_inf = std::max(norm_inf, gi);
            if (std::isfinite(q)) norm_q += std::pow(gi, q);
        }
        K = std::max(K, std::isfinite(q) ? std::pow(norm_q, 1.0 / q) : norm_inf);
    }
    return K;
}

struct Perturbation {
    enum class Kind { shift, resample, atom_jitter };
    Kind kind = Kind::atom_jitter;
    double shift_delta = 0.0;
    int resample_n = 0;
    double jitter_sigma = 0.0;
};

struct StabilityTrial {
    int index = 0;
    double observed = 0.0;
    double bound = 0.0;
    double statement_bound = 0.0;
    std::vector<double> wp;
    bool satisfied = false;
};

struct StabilityReport {
    double bound = 0.0;      // worst trial bound
    double observed = 0.0;   // worst trial observation
    bool satisfied = true;   // every trial: observed <= bound + 1e-9
    double K = 0.0, M = 0.0, p = 1.0;
    double worst_ratio = 0.0;
    std::vector<StabilityTrial> trial_log;
};

namespace detail {

inline Marginal perturb(const Marginal& mu, const Perturbation& pert, std::mt19937_64& rng,
                        int discretize_fallback) {
    switch (pert.kind) {
        case Perturbation::Kind::shift:
            return mu.shifted(pert.shift_delta);
        case Perturbation::Kind::resample: {
            if (pert.resample_n < 1) throw config_error("resample perturbation needs n >= 1");
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::vector<std::pair<double, double>> atoms;
            atoms.reserve(static_cast<std::size_t>(pert.resample_n));
            for (int k = 0; k < pert.resample_n; ++k)
                atoms.emplace_back(mu.quantile(unif(rng)), 1.0 / pert.resample_n);
            return Marginal::discrete(std::move(atoms));
        }
        case Perturbation::Kind::atom_jitter: {
            const Marginal base = mu.is_discrete() ? mu : mu.discretized(discretize_fallback);
            std::normal_distribution<double> noise(0.0, pert.jitter_sigma);
            std::vector<std::pair<double, double>> atoms;
            auto locs = base.atom_locations();
            auto ws = base.atom_weights();
            for (std::size_t k = 0; k < locs.size(); ++k)
                atoms.emplace_back(locs[k] + noise(rng), ws[k]);
            return Marginal::discrete(std::move(atoms));
        }
    }
    throw config_error("unknown perturbation kind");
}

inline std::vector<std::array<double, 2>> padded_box(const std::vector<Marginal>& ms,
                                                     const Payout& b, double pad) {
    std::vector<std::array<double, 2>> box = b.domain();
    for (std::size_t i = 0; i < ms.size(); ++i) {
        box[i][0] = std::min(box[i][0], ms[i].lo() - pad);
        box[i][1] = std::max(box[i][1], ms[i].hi() + pad);
    }
    return box;
}

}  // namespace detail

/// Perturb every marginal `trials` times, re-solve through the comonotone
/// route, and compare |delta value| against the Lipschitz bound. K is
/// estimated from the probe grid and inflated by 1% to absorb grid error
/// unless an exact constant is supplied.
inline StabilityReport perturbation_experiment(const SpectralFunction& alpha, const Payout& b,
                                               const std::vector<Marginal>& marginals,
                                               const Perturbation& pert, int trials,
                                               double p = 1.0, std::uint64_t seed = 1,
                                               std::optional<double> known_K = {},
                                               int discretize_fallback = 64) {
    if (trials < 1) throw config_error("perturbation_experiment needs trials >= 1");
    StabilityReport rep;
    rep.p = p;
    rep.M = std::max(alpha.bound(), 0.0);
    rep.K = known_K ? *known_K : 1.01 * estimate_lipschitz_constant(b, p);
    if (!(rep.K > 0.0)) throw config_error("estimated Lipschitz constant is zero");

    // Perturbed instances may spill outside the original box; rebuild the
    // payout on a padded domain so probing and evaluation stay in-domain.
    const double pad_scale = (pert.kind == Perturbation::Kind::shift)
                                 ? std::abs(pert.shift_delta)
                                 : std::max(1.0, 8.0 * pert.jitter_sigma);
    std::vector<Marginal> base;
    for (const auto& mu : marginals)
        base.push_back(mu.is_discrete() || pert.kind != Perturbation::Kind::atom_jitter
                           ? mu
                           : mu.discretized(discretize_fallback));
    const Payout wide(b.ast(), detail::padded_box(base, b, pad_scale + 1e-9), b.var_names());
    const double value0 = solve_compatible(alpha, wide, base).value;

    std::mt19937_64 rng(seed);
    for (int t = 0; t < trials; ++t) {
        std::vector<Marginal> moved;
        std::vector<double> wp;
        for (const auto& mu : base) {
            moved.push_back(detail::perturb(mu, pert, rng, discretize_fallback));
            wp.push_back(wasserstein_1d(mu, moved.back(), p));
        }
        const Payout wider(b.ast(), detail::padded_box(moved, wide, 0.0), b.var_names());
        const double value1 = solve_compatible(alpha, wider, moved).value;

        StabilityTrial trial;
        trial.index = t;
        trial.observed = std::abs(value1 - value0);
        const LipschitzBound lb = lipschitz_bound(rep.K, std::max(rep.M, 1e-300), wp, p);
        trial.bound = lb.proof_form;
        trial.statement_bound = lb.statement_form;
        trial.wp = std::move(wp);
        trial.satisfied = trial.observed <= trial.bound + 1e-9;
        rep.satisfied = rep.satisfied && trial.satisfied;
        rep.bound = std::max(rep.bound, trial.bound);
        rep.observed = std::max(rep.observed, trial.observed);
        if (trial.bound > 0.0)
            rep.worst_ratio = std::max(rep.worst_ratio, trial.observed / trial.bound);
        rep.trial_log.push_back(std::move(trial));
    }
    return rep;
}

struct ConvergenceRow {
    int level = 0;
    int refinement = 0;
    double value = 0.0;
    double gap = 0.0;  // |value - limit value|
};

struct ConvergenceTable {
    double limit_value = 0.0;
    std::vector<ConvergenceRow> rows;
    bool trending_down = false;  // last gap below first gap
};

/// Weak-convergence probe: refine discretizations on a doubling schedule
/// n = 2^k, optionally fading a payout perturbation g/n and moving the
/// spectral function, and track |value_n - value_infinity|. The qualitative
/// assertion is trend, not rate.
inline ConvergenceTable weak_stability_probe(
    const SpectralFunction& alpha, const Payout& b, const std::vector<Marginal>& marginals,
    int levels, int base_n = 8,
    const std::function<SpectralFunction(int, const SpectralFunction&)>& alpha_at_level = {},
    const std::function<double(std::span<const double>)>& payout_bump = {}) {
    if (levels < 2) throw config_error("weak_stability_probe needs at least two levels");

    ConvergenceTable table;
    table.limit_value = solve_compatible(alpha, b, marginals).value;

    for (int k = 0; k < levels; ++k) {
        const int n = base_n << k;
        std::vector<Marginal> refined;
        for (const auto& mu : marginals) refined.push_back(mu.discretized(n));
        const SpectralFunction ak = alpha_at_level ? alpha_at_level(n, alpha) : alpha;

        double value;
        if (payout_bump) {
            // b_n = b + (1/n) * g, evaluated through the comonotone composition
            // of the refined instance (hypotheses follow b's classification).
            SignStructure signs = classify_compatibility(mixed_partial_signs(b), !ak.is_constant());
            if (signs.verdict == Verdict::incompatible)
                throw hypothesis_error("weak_stability_probe: payout is not compatible");
            auto G = build_G(refined, signs.s_minus);
            std::vector<double> x(refined.size());
            auto integrand = [&](double m) {
                for (std::size_t i = 0; i < G.size(); ++i) x[i] = G[i](m);
                return ak(m) * (b(x) + payout_bump(x) / n);
            };
            value = detail::integrate_exact_steps(integrand,
                                                  detail::composition_breakpoints(ak, G));
        } else {
            value = solve_compatible(ak, b, refined).value;
        }

        ConvergenceRow row;
        row.level = k;
        row.refinement = n;
        row.value = value;
        row.gap = std::abs(value - table.limit_value);
        table.rows.push_back(row);
    }
    table.trending_down = table.rows.back().gap < table.rows.front().gap ||
                          table.rows.back().gap <= 1e-12;
    return table;
}

}  // namespace specrisk
