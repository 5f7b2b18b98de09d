#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/numerics.hpp"
#include "specrisk/payout.hpp"
#include "specrisk/spectral.hpp"

namespace specrisk {

/// One coordinate of the monotone coupling: m -> F^{-1}(m), reversed to
/// m -> F^{-1}(1-m) for variables on the minus side of the partition.
struct MonotoneMap {
    Marginal mu;
    bool flipped = false;

    double operator()(double m) const { return mu.quantile(flipped ? 1.0 - m : m); }

    std::vector<double> breakpoints() const {
        auto bp = mu.quantile_breakpoints();
        if (flipped)
            for (double& m : bp) m = 1.0 - m;
        return bp;
    }
};

/// Quantile maps of the coupling: G_i = F^{-1}_{mu_i} on S+, the reversed
/// quantile on S-. Indices in s_minus follow the partition convention where
/// 0 is the spectral axis and variables are 1..d.
inline std::vector<MonotoneMap> build_G(const std::vector<Marginal>& marginals,
                                        std::span<const int> s_minus) {
    std::vector<MonotoneMap> G;
    G.reserve(marginals.size());
    for (std::size_t i = 0; i < marginals.size(); ++i) {
        bool flip = false;
        for (int j : s_minus)
            if (j == static_cast<int>(i) + 1) flip = true;
        G.push_back(MonotoneMap{marginals[i], flip});
    }
    return G;
}

namespace detail {

/// Integrate g over [0,1] given that g is piecewise constant between the cuts:
/// a single midpoint evaluation per refinement cell is exact.
inline double integrate_exact_steps(const std::function<double(double)>& g,
                                    std::vector<double> cuts) {
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> terms;
    terms.reserve(cuts.size());
    double prev = 0.0;
    for (double m : cuts) {
        if (m <= prev) continue;
        m = std::min(m, 1.0);
        terms.push_back((m - prev) * g(0.5 * (prev + m)));
        prev = m;
    }
    return pairwise_sum(terms);
}

inline std::vector<double> composition_breakpoints(const SpectralFunction& alpha,
                                                   const std::vector<MonotoneMap>& G) {
    std::vector<double> cuts = alpha.breakpoints();
    for (const auto& g : G) {
        auto bp = g.breakpoints();
        cuts.insert(cuts.end(), bp.begin(), bp.end());
    }
    return cuts;
}

}  // namespace detail

/// The closed-form optimal value int_0^1 alpha(m) b(G_1(m), ..., G_d(m)) dm.
/// Exact finite summation over the common breakpoint refinement when every
/// marginal is discrete and alpha is piecewise constant; composite
/// Gauss-Legendre with Richardson doubling otherwise.
inline double optimal_value(const SpectralFunction& alpha, const Payout& b,
                            const std::vector<MonotoneMap>& G) {
    if (static_cast<int>(G.size()) != b.arity())
        throw config_error("optimal_value: payout arity and map count disagree");
    std::vector<double> x(G.size());
    auto g = [&](double m) {
        for (std::size_t i = 0; i < G.size(); ++i) x[i] = G[i](m);
        return alpha(m) * b(x);
    };
    bool exact = alpha.is_piecewise_constant();
    for (const auto& gm : G) exact = exact && gm.mu.is_discrete();
    auto cuts = detail::composition_breakpoints(alpha, G);
    if (exact) return detail::integrate_exact_steps(g, std::move(cuts));
    return integrate_unit(g, std::move(cuts));
}

struct ComonotoneSolution {
    std::vector<MonotoneMap> G;
    double value = 0.0;
    double alpha_zero_mass = 0.0;       // a = mu0({0})
    bool unique_off_alpha_zero = false;
    SignStructure structure;            // probed signs, partition, verdict
    std::vector<double> region_boundaries;  // G_i(a): edge of the alpha = 0 region per variable

    std::vector<std::string> support_header;          // m, x..., payout value(s)
    std::vector<std::vector<double>> support_sample;  // sampled rows of the coupling
};

/// Solve the worst-case spectral risk for a compatible payout through the
/// monotone coupling. The partition is taken from classify_compatibility
/// unless an explicit minus-set is supplied (user override, e.g. for payouts
/// whose supermodularity is declared rather than probed). Refuses with a
/// hypothesis error when the payout is incompatible or its monotonicity does
/// not match the partition.
inline ComonotoneSolution solve_compatible(const SpectralFunction& alpha, const Payout& b,
                                           const std::vector<Marginal>& marginals,
                                           std::optional<std::vector<int>> s_minus_override = {},
                                           int grid_per_axis = 0, int support_rows = 201) {
    const int d = b.arity();
    if (static_cast<int>(marginals.size()) != d)
        throw config_error("solve_compatible: payout arity and marginal count disagree");
    for (int i = 0; i < d; ++i) {
        const auto& box = b.domain()[static_cast<std::size_t>(i)];
        if (marginals[static_cast<std::size_t>(i)].lo() < box[0] - 1e-12 ||
            marginals[static_cast<std::size_t>(i)].hi() > box[1] + 1e-12)
            throw config_error("marginal support of " + b.var_names()[static_cast<std::size_t>(i)] +
                               " leaves the payout domain box");
    }

    const bool alpha_varies = !alpha.is_constant();
    SignStructure signs =
        classify_compatibility(mixed_partial_signs(b, grid_per_axis), alpha_varies);

    std::vector<int> s_minus;
    if (s_minus_override) {
        for (int i : *s_minus_override)
            if (i < 1 || i > d)
                throw config_error("partition override lists a variable outside 1..d");
        s_minus = *s_minus_override;
    } else {
        if (signs.verdict == Verdict::incompatible) {
            std::string msg = "payout is not compatible";
            if (signs.witness) {
                msg += " (witness indices:";
                for (int i : signs.witness->indices) msg += " " + std::to_string(i);
                msg += "; " + signs.witness->detail + ")";
            }
            throw hypothesis_error(msg + "; use the MMOT solver instead");
        }
        s_minus = signs.s_minus;
    }

    if (alpha_varies) {
        for (int i = 1; i <= d; ++i) {
            const Sign s0 = signs.sigma0[static_cast<std::size_t>(i - 1)];
            bool minus_side = false;
            for (int j : s_minus) minus_side |= (j == i);
            const bool ok = (s0 == Sign::zero) || (minus_side ? s0 == Sign::minus : s0 == Sign::plus);
            if (!ok)
                throw hypothesis_error(
                    "monotonicity of variable " + b.var_names()[static_cast<std::size_t>(i - 1)] +
                    " (" + to_string(signs.monotonicity[static_cast<std::size_t>(i - 1)]) +
                    ") does not match its partition side");
        }
    }

    ComonotoneSolution sol;
    sol.structure = signs;
    sol.structure.s_minus = s_minus;
    sol.structure.s_plus.clear();
    sol.structure.s_plus.push_back(0);
    for (int i = 1; i <= d; ++i) {
        bool minus_side = false;
        for (int j : s_minus) minus_side |= (j == i);
        if (!minus_side) sol.structure.s_plus.push_back(i);
    }
    sol.G = build_G(marginals, s_minus);
    sol.value = optimal_value(alpha, b, sol.G);
    sol.alpha_zero_mass = spectral_measure(alpha).atom_at_zero_mass;

    bool all_strict = true;
    for (const Monotonicity m : signs.monotonicity)
        all_strict = all_strict && (m == Monotonicity::strict_increasing ||
                                    m == Monotonicity::strict_decreasing);
    sol.unique_off_alpha_zero =
        alpha_varies ? all_strict : (signs.verdict == Verdict::strictly_compatible);

    for (const auto& g : sol.G) sol.region_boundaries.push_back(g(sol.alpha_zero_mass));

    sol.support_header.push_back("m");
    for (const auto& name : b.var_names()) sol.support_header.push_back(name);
    sol.support_header.push_back("b");
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int r = 0; r < support_rows; ++r) {
        const double m = support_rows > 1 ? static_cast<double>(r) / (support_rows - 1) : 0.5;
        std::vector<double> row = {m};
        for (int i = 0; i < d; ++i) {
            x[static_cast<std::size_t>(i)] = sol.G[static_cast<std::size_t>(i)](m);
            row.push_back(x[static_cast<std::size_t>(i)]);
        }
        row.push_back(b(x));
        sol.support_sample.push_back(std::move(row));
    }
    return sol;
}

}  // namespace specrisk
