#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/payout.hpp"
#include "specrisk/spectral.hpp"
#include "specrisk/transport_lp.hpp"

namespace specrisk {

/// The MMOT lift of a spectral risk instance: the extra marginal
/// mu0 = alpha_# Leb together with the surplus s(x0, x) = x0 * b(x).
struct LiftedSurplus {
    SpectralMeasure mu0;
    const Payout* b = nullptr;

    double operator()(double x0, std::span<const double> x) const { return x0 * (*b)(x); }
};

inline LiftedSurplus lift_surplus(const SpectralFunction& alpha, const Payout& b,
                                  int quantization_n = 1024) {
    return LiftedSurplus{spectral_measure(alpha, quantization_n), &b};
}

namespace detail {

inline std::vector<std::vector<double>> atom_weight_table(const std::vector<Marginal>& marginals,
                                                          const char* who) {
    std::vector<std::vector<double>> w;
    w.reserve(marginals.size());
    for (const auto& mu : marginals) {
        if (!mu.is_discrete())
            throw config_error(std::string(who) + " requires discrete marginals");
        w.emplace_back(mu.atom_weights().begin(), mu.atom_weights().end());
    }
    return w;
}

}  // namespace detail

using LocationSurplus = std::function<double(std::span<const double>)>;

/// Exact LP solve of the multi-marginal problem over discrete marginals, with
/// the surplus evaluated at atom locations.
inline LpSolution solve_mmot_lp(const std::vector<Marginal>& marginals,
                                const LocationSurplus& surplus,
                                const TransportLpOptions& opt = {}) {
    auto weights = detail::atom_weight_table(marginals, "solve_mmot_lp");
    std::vector<double> xs(marginals.size());
    return solve_transport_lp(
        weights,
        [&](std::span<const int> t) {
            for (std::size_t k = 0; k < marginals.size(); ++k)
                xs[k] = marginals[k].atom_locations()[static_cast<std::size_t>(t[k])];
            return surplus(xs);
        },
        opt);
}

inline LpSolution solve_mmot_entropic(const std::vector<Marginal>& marginals,
                                      const LocationSurplus& surplus, double epsilon,
                                      const EntropicOptions& opt = {}) {
    auto weights = detail::atom_weight_table(marginals, "solve_mmot_entropic");
    std::vector<double> xs(marginals.size());
    return solve_transport_entropic(
        weights,
        [&](std::span<const int> t) {
            for (std::size_t k = 0; k < marginals.size(); ++k)
                xs[k] = marginals[k].atom_locations()[static_cast<std::size_t>(t[k])];
            return surplus(xs);
        },
        epsilon, opt);
}

/// Solve the lifted instance: marginals (mu0, mu_1, ..., mu_d) with surplus
/// x0 * b(x). mu0 comes from the spectral measure (exact for piecewise-
/// constant alpha).
inline LpSolution solve_lifted_lp(const SpectralFunction& alpha, const Payout& b,
                                  const std::vector<Marginal>& marginals,
                                  const TransportLpOptions& opt = {},
                                  int quantization_n = 1024) {
    LiftedSurplus lift = lift_surplus(alpha, b, quantization_n);
    std::vector<Marginal> all;
    all.reserve(marginals.size() + 1);
    all.push_back(lift.mu0.measure);
    for (const auto& mu : marginals) all.push_back(mu);
    return solve_mmot_lp(all, [&](std::span<const double> xs) {
        return xs[0] * b(xs.subspan(1));
    }, opt);
}

struct MonotoneSupportReport {
    bool monotone = true;
    // Violating pairs of support points, reported as (x0, b(x)) value pairs.
    std::vector<std::array<double, 4>> violations;
};

/// Check the optimality certificate of the lift: the pushforward of the plan
/// by (x0, b(x)) must have monotone increasing support. Pairs of support
/// points with weight above 1e-12 whose (x0, z) coordinates move in opposite
/// directions beyond tolerance are reported.
inline MonotoneSupportReport monotone_support_check(const Coupling& plan,
                                                    const std::vector<Marginal>& lifted_marginals,
                                                    const Payout& b, double tol = -1.0) {
    if (plan.shape.size() != lifted_marginals.size() ||
        plan.shape.size() != static_cast<std::size_t>(b.arity()) + 1)
        throw config_error("monotone_support_check: plan axes must be (x0, x1..xd)");

    std::vector<std::pair<double, double>> pts;  // (x0, b(x))
    std::vector<double> x(static_cast<std::size_t>(b.arity()));
    for (const auto& [tuple, w] : plan.support) {
        if (w <= 1e-12) continue;
        const double x0 = lifted_marginals[0].atom_locations()[static_cast<std::size_t>(tuple[0])];
        for (int i = 0; i < b.arity(); ++i)
            x[static_cast<std::size_t>(i)] =
                lifted_marginals[static_cast<std::size_t>(i) + 1]
                    .atom_locations()[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i) + 1])];
        pts.emplace_back(x0, b(x));
    }
    if (tol < 0.0) {
        double sx = 0.0, sz = 0.0;
        for (const auto& [x0, z] : pts) {
            sx = std::max(sx, std::abs(x0));
            sz = std::max(sz, std::abs(z));
        }
        tol = 1e-9 * (1.0 + sx) * (1.0 + sz);
    }

    MonotoneSupportReport rep;
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t c = a + 1; c < pts.size(); ++c) {
            const double prod = (pts[c].first - pts[a].first) * (pts[c].second - pts[a].second);
            if (prod < -tol) {
                rep.monotone = false;
                rep.violations.push_back({pts[a].first, pts[a].second, pts[c].first, pts[c].second});
            }
        }
    }
    return rep;
}

/// Expected-Shortfall route: maximize (1/m0) int b dgamma over sub-couplings
/// of mass m0 dominated by the marginals.
inline LpSolution partial_transport_value(double m0, const Payout& b,
                                          const std::vector<Marginal>& marginals,
                                          const TransportLpOptions& opt = {}) {
    if (static_cast<int>(marginals.size()) != b.arity())
        throw config_error("partial_transport_value: arity mismatch");
    auto weights = detail::atom_weight_table(marginals, "partial_transport_value");
    std::vector<double> xs(marginals.size());
    return solve_partial_lp(
        weights,
        [&](std::span<const int> t) {
            for (std::size_t k = 0; k < marginals.size(); ++k)
                xs[k] = marginals[k].atom_locations()[static_cast<std::size_t>(t[k])];
            return b(xs);
        },
        m0, opt);
}

}  // namespace specrisk
