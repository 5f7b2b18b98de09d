#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/numerics.hpp"
#include "specrisk/simplex.hpp"
#include "specrisk/spectral.hpp"

namespace specrisk {

/// A discrete coupling of several atom lists, stored as weighted index tuples.
/// Axis k has shape[k] atoms; every support entry carries one atom index per
/// axis. Weights sum to 1 for full couplings, to the prescribed mass for
/// partial ones.
struct Coupling {
    std::vector<int> shape;
    std::vector<std::pair<std::vector<int>, double>> support;

    std::size_t arity() const { return shape.size(); }

    double total_mass() const {
        std::vector<double> w(support.size());
        for (std::size_t k = 0; k < support.size(); ++k) w[k] = support[k].second;
        return pairwise_sum(w);
    }

    /// Axis projections: weight landing on each atom of each axis.
    std::vector<std::vector<double>> axis_marginals() const {
        std::vector<std::vector<double>> proj(shape.size());
        for (std::size_t k = 0; k < shape.size(); ++k)
            proj[k].assign(static_cast<std::size_t>(shape[k]), 0.0);
        for (const auto& [tuple, w] : support)
            for (std::size_t k = 0; k < shape.size(); ++k)
                proj[k][static_cast<std::size_t>(tuple[k])] += w;
        return proj;
    }
};

using IndexSurplus = std::function<double(std::span<const int>)>;

struct LpSolution {
    double value = 0.0;
    Coupling plan;
    LpStatus status = LpStatus::optimal;
    std::optional<std::vector<std::vector<double>>> dual_potentials;  // per axis, per atom
    long pivots = 0;
};

struct TransportLpOptions {
    long max_pivots = 1'000'000;
    bool want_duals = true;
    std::size_t max_tuples = 200'000;
};

namespace detail {

inline std::size_t checked_product(const std::vector<std::vector<double>>& weights,
                                   std::size_t guard, const char* who) {
    if (weights.empty()) throw config_error(std::string(who) + ": need at least one marginal");
    std::size_t total = 1;
    for (const auto& w : weights) {
        if (w.empty()) throw config_error(std::string(who) + ": empty marginal");
        double sum = pairwise_sum(w);
        if (std::abs(sum - 1.0) > 1e-10)
            throw config_error(std::string(who) + ": marginal weights must sum to 1");
        for (double v : w)
            if (!(v > 0.0)) throw config_error(std::string(who) + ": weights must be positive");
        if (static_cast<double>(total) * static_cast<double>(w.size()) >
            static_cast<double>(guard) + 0.5)
            throw config_error(std::string(who) + ": instance exceeds the size guard (" +
                               std::to_string(guard) + " tuples)");
        total *= w.size();
    }
    return total;
}

inline void unrank(std::size_t rank, const std::vector<int>& shape, std::vector<int>& tuple) {
    for (std::size_t k = shape.size(); k-- > 0;) {
        tuple[k] = static_cast<int>(rank % static_cast<std::size_t>(shape[k]));
        rank /= static_cast<std::size_t>(shape[k]);
    }
}

}  // namespace detail

/// Exact discrete multi-marginal OT: maximize sum_t surplus(t) pi_t over the
/// transport polytope of the given marginal weight vectors. Solved by the
/// dense two-phase simplex; one redundant atom constraint is dropped from
/// every marginal after the first, so the constraint system has full rank and
/// the returned vertex plan has at most sum(n_k) - K + 1 support points.
inline LpSolution solve_transport_lp(const std::vector<std::vector<double>>& weights,
                                     const IndexSurplus& surplus,
                                     const TransportLpOptions& opt = {}) {
    const std::size_t ntup = detail::checked_product(weights, opt.max_tuples, "transport lp");
    const std::size_t K = weights.size();
    std::vector<int> shape(K);
    for (std::size_t k = 0; k < K; ++k) shape[k] = static_cast<int>(weights[k].size());

    // Constraint rows: all atoms of axis 0, then atoms 0..n_k-2 of each later axis.
    std::vector<std::pair<std::size_t, int>> rows;  // (axis, atom)
    for (int a = 0; a < shape[0]; ++a) rows.emplace_back(0, a);
    for (std::size_t k = 1; k < K; ++k)
        for (int a = 0; a + 1 < shape[k]; ++a) rows.emplace_back(k, a);
    const std::size_t m = rows.size();

    std::vector<std::vector<int>> row_index(K);
    for (std::size_t k = 0; k < K; ++k) row_index[k].assign(static_cast<std::size_t>(shape[k]), -1);
    for (std::size_t r = 0; r < m; ++r) row_index[rows[r].first][static_cast<std::size_t>(rows[r].second)] = static_cast<int>(r);

    std::vector<double> A(m * ntup, 0.0), b(m), c(ntup);
    for (std::size_t r = 0; r < m; ++r) b[r] = weights[rows[r].first][static_cast<std::size_t>(rows[r].second)];
    std::vector<int> tuple(K);
    for (std::size_t t = 0; t < ntup; ++t) {
        detail::unrank(t, shape, tuple);
        c[t] = surplus(tuple);
        if (!std::isfinite(c[t])) throw numerical_error("transport lp: non-finite surplus value");
        for (std::size_t k = 0; k < K; ++k) {
            const int r = row_index[k][static_cast<std::size_t>(tuple[k])];
            if (r >= 0) A[static_cast<std::size_t>(r) * ntup + t] = 1.0;
        }
    }

    SimplexOptions sopt;
    sopt.max_pivots = opt.max_pivots;
    SimplexOutcome res = simplex_equality_max(std::move(A), std::move(b), c, sopt);

    LpSolution sol;
    sol.pivots = res.pivots;
    sol.status = res.status;
    sol.plan.shape = shape;
    if (res.status == LpStatus::infeasible) return sol;
    if (res.status == LpStatus::unbounded)
        throw numerical_error("transport lp reported unbounded; constraint system is broken");
    sol.value = res.value;
    for (std::size_t t = 0; t < ntup; ++t) {
        if (res.x.empty()) break;
        if (res.x[t] > 1e-15) {
            detail::unrank(t, shape, tuple);
            sol.plan.support.emplace_back(tuple, res.x[t]);
        }
    }
    if (opt.want_duals && res.status == LpStatus::optimal) {
        std::vector<std::vector<double>> pots(K);
        for (std::size_t k = 0; k < K; ++k) pots[k].assign(static_cast<std::size_t>(shape[k]), 0.0);
        for (std::size_t r = 0; r < m; ++r)
            pots[rows[r].first][static_cast<std::size_t>(rows[r].second)] = res.dual[r];
        sol.dual_potentials = std::move(pots);
    }
    return sol;
}

/// Optimal partial transport: maximize (1/m0) * sum_t surplus(t) gamma_t over
/// nonnegative gamma with axis projections dominated by the marginals and
/// total mass m0. Inequalities get one slack per atom; the mass constraint is
/// an equality.
inline LpSolution solve_partial_lp(const std::vector<std::vector<double>>& weights,
                                   const IndexSurplus& surplus, double m0,
                                   const TransportLpOptions& opt = {}) {
    if (!(m0 > 0.0 && m0 <= 1.0)) throw config_error("partial transport mass must lie in (0, 1]");
    const std::size_t ntup = detail::checked_product(weights, opt.max_tuples, "partial transport");
    const std::size_t K = weights.size();
    std::vector<int> shape(K);
    for (std::size_t k = 0; k < K; ++k) shape[k] = static_cast<int>(weights[k].size());

    std::size_t natoms = 0;
    for (const auto& w : weights) natoms += w.size();
    const std::size_t m = natoms + 1;        // one row per atom + the mass row
    const std::size_t nvar = ntup + natoms;  // tuples + slacks

    std::vector<double> A(m * nvar, 0.0), b(m, 0.0), c(nvar, 0.0);
    std::vector<std::vector<std::size_t>> row_index(K);
    {
        std::size_t r = 0;
        for (std::size_t k = 0; k < K; ++k) {
            row_index[k].resize(weights[k].size());
            for (std::size_t a = 0; a < weights[k].size(); ++a, ++r) {
                row_index[k][a] = r;
                b[r] = weights[k][a];
                A[r * nvar + ntup + r] = 1.0;  // slack
            }
        }
        b[natoms] = m0;
    }
    std::vector<int> tuple(K);
    for (std::size_t t = 0; t < ntup; ++t) {
        detail::unrank(t, shape, tuple);
        c[t] = surplus(tuple);
        if (!std::isfinite(c[t])) throw numerical_error("partial transport: non-finite surplus");
        for (std::size_t k = 0; k < K; ++k)
            A[row_index[k][static_cast<std::size_t>(tuple[k])] * nvar + t] = 1.0;
        A[natoms * nvar + t] = 1.0;
    }

    SimplexOptions sopt;
    sopt.max_pivots = opt.max_pivots;
    SimplexOutcome res = simplex_equality_max(std::move(A), std::move(b), c, sopt);

    LpSolution sol;
    sol.pivots = res.pivots;
    sol.status = res.status;
    sol.plan.shape = shape;
    if (res.status == LpStatus::infeasible) return sol;
    if (res.status == LpStatus::unbounded)
        throw numerical_error("partial transport lp reported unbounded");
    sol.value = res.value / m0;
    for (std::size_t t = 0; t < ntup; ++t) {
        if (res.x[t] > 1e-15) {
            detail::unrank(t, shape, tuple);
            sol.plan.support.emplace_back(tuple, res.x[t]);
        }
    }
    return sol;
}

struct EntropicOptions {
    long max_iter = 20'000;          // total Sinkhorn sweeps across all epsilon levels
    double residual_tol = 1e-9;      // L-inf marginal residual at the target epsilon
    bool epsilon_scaling = true;     // anneal from a large epsilon down to the target
    std::size_t max_tensor = 10'000'000;
};

/// Entropically regularized multi-marginal transport by iterative proportional
/// scaling in the log domain. With epsilon scaling enabled the potentials are
/// warm-started through a halving schedule, which keeps small target epsilons
/// usable. The reported value is the linear surplus of the returned plan.
inline LpSolution solve_transport_entropic(const std::vector<std::vector<double>>& weights,
                                           const IndexSurplus& surplus, double epsilon,
                                           const EntropicOptions& opt = {}) {
    if (!(epsilon > 0.0)) throw config_error("entropic solver requires epsilon > 0");
    const std::size_t ntup = detail::checked_product(weights, opt.max_tensor, "entropic transport");
    const std::size_t K = weights.size();
    std::vector<int> shape(K);
    for (std::size_t k = 0; k < K; ++k) shape[k] = static_cast<int>(weights[k].size());

    std::vector<double> s(ntup);
    std::vector<int> tuple(K);
    double smax = -std::numeric_limits<double>::infinity(), smin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < ntup; ++t) {
        detail::unrank(t, shape, tuple);
        s[t] = surplus(tuple);
        if (!std::isfinite(s[t])) throw numerical_error("entropic transport: non-finite surplus");
        smax = std::max(smax, s[t]);
        smin = std::min(smin, s[t]);
    }

    std::vector<std::vector<double>> logw(K), u(K);
    for (std::size_t k = 0; k < K; ++k) {
        logw[k].resize(weights[k].size());
        u[k].assign(weights[k].size(), 0.0);
        for (std::size_t a = 0; a < weights[k].size(); ++a) logw[k][a] = std::log(weights[k][a]);
    }

    std::vector<double> logpi(ntup);
    auto fill_logpi = [&](double eps) {
        for (std::size_t t = 0; t < ntup; ++t) {
            detail::unrank(t, shape, tuple);
            double e = s[t];
            double lw = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                e -= u[k][static_cast<std::size_t>(tuple[k])];
                lw += logw[k][static_cast<std::size_t>(tuple[k])];
            }
            logpi[t] = e / eps + lw;
        }
    };

    // One proportional-scaling update of axis k at temperature eps.
    std::vector<double> lse_max, lse_sum;
    auto update_axis = [&](std::size_t k, double eps) {
        lse_max.assign(weights[k].size(), -std::numeric_limits<double>::infinity());
        lse_sum.assign(weights[k].size(), 0.0);
        for (std::size_t t = 0; t < ntup; ++t) {
            detail::unrank(t, shape, tuple);
            double e = s[t];
            double lw = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                if (j == k) continue;
                e -= u[j][static_cast<std::size_t>(tuple[j])];
                lw += logw[j][static_cast<std::size_t>(tuple[j])];
            }
            const double val = e / eps + lw;
            const std::size_t a = static_cast<std::size_t>(tuple[k]);
            lse_max[a] = std::max(lse_max[a], val);
        }
        for (std::size_t t = 0; t < ntup; ++t) {
            detail::unrank(t, shape, tuple);
            double e = s[t];
            double lw = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                if (j == k) continue;
                e -= u[j][static_cast<std::size_t>(tuple[j])];
                lw += logw[j][static_cast<std::size_t>(tuple[j])];
            }
            const std::size_t a = static_cast<std::size_t>(tuple[k]);
            lse_sum[a] += std::exp(e / eps + lw - lse_max[a]);
        }
        for (std::size_t a = 0; a < u[k].size(); ++a)
            u[k][a] = eps * (lse_max[a] + std::log(lse_sum[a]));
    };

    auto residual = [&](double eps) {
        fill_logpi(eps);
        double worst = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<double> proj(weights[k].size(), 0.0);
            for (std::size_t t = 0; t < ntup; ++t) {
                detail::unrank(t, shape, tuple);
                proj[static_cast<std::size_t>(tuple[k])] += std::exp(logpi[t]);
            }
            for (std::size_t a = 0; a < proj.size(); ++a)
                worst = std::max(worst, std::abs(proj[a] - weights[k][a]));
        }
        return worst;
    };

    std::vector<double> levels;
    if (opt.epsilon_scaling) {
        double e0 = std::max(epsilon, 0.5 * std::max(smax - smin, 1e-12));
        while (e0 > epsilon * 1.0001) {
            levels.push_back(e0);
            e0 *= 0.5;
        }
    }
    levels.push_back(epsilon);

    long sweeps = 0;
    bool converged = false;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const double eps = levels[li];
        const bool target = (li + 1 == levels.size());
        const double tol = target ? opt.residual_tol : 1e-4;
        const long budget = target ? opt.max_iter : std::max<long>(50, opt.max_iter / 50);
        for (long it = 0; it < budget && sweeps < opt.max_iter; ++it) {
            for (std::size_t k = 0; k < K; ++k) update_axis(k, eps);
            ++sweeps;
            if (residual(eps) < tol) {
                converged = target;
                break;
            }
        }
        if (converged) break;
    }

    const double eps = levels.back();
    fill_logpi(eps);
    LpSolution sol;
    sol.plan.shape = shape;
    sol.status = (converged || residual(eps) < opt.residual_tol) ? LpStatus::optimal
                                                                 : LpStatus::iteration_limit;
    std::vector<double> value_terms;
    for (std::size_t t = 0; t < ntup; ++t) {
        const double w = std::exp(logpi[t]);
        if (w > 1e-14) {
            detail::unrank(t, shape, tuple);
            sol.plan.support.emplace_back(tuple, w);
            value_terms.push_back(w * s[t]);
        }
    }
    sol.value = pairwise_sum(value_terms);
    return sol;
}

/// Per-axis L-infinity gap between the plan's projections and the declared
/// marginal weights.
inline std::vector<double> marginal_residuals(const Coupling& plan,
                                              const std::vector<std::vector<double>>& weights) {
    if (plan.shape.size() != weights.size())
        throw config_error("marginal_residuals: axis count mismatch");
    std::vector<double> out(weights.size(), 0.0);
    for (std::size_t k = 0; k < weights.size(); ++k) {
        std::vector<double> proj(weights[k].size(), 0.0);
        for (const auto& [tuple, w] : plan.support)
            proj[static_cast<std::size_t>(tuple[k])] += w;
        for (std::size_t a = 0; a < proj.size(); ++a)
            out[k] = std::max(out[k], std::abs(proj[a] - weights[k][a]));
    }
    return out;
}

/// R_alpha(mu) through the variational identity: the exact LP value of the
/// two-marginal problem with surplus x*y between alpha_# Leb and mu.
inline double risk_via_ot(const SpectralFunction& alpha, const Marginal& mu) {
    if (!mu.is_discrete())
        throw config_error("risk_via_ot requires a discrete marginal");
    const SpectralMeasure mu0 = spectral_measure(alpha);
    auto l0 = mu0.measure.atom_locations();
    auto l1 = mu.atom_locations();
    std::vector<std::vector<double>> weights = {
        {mu0.measure.atom_weights().begin(), mu0.measure.atom_weights().end()},
        {mu.atom_weights().begin(), mu.atom_weights().end()}};
    LpSolution sol = solve_transport_lp(
        weights, [&](std::span<const int> t) { return l0[static_cast<std::size_t>(t[0])] * l1[static_cast<std::size_t>(t[1])]; });
    if (sol.status != LpStatus::optimal)
        throw numerical_error("risk_via_ot: LP did not reach optimality");
    return sol.value;
}

}  // namespace specrisk
