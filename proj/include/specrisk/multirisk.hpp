#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "specrisk/comonotone.hpp"
#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/payout.hpp"
#include "specrisk/spectral.hpp"
#include "specrisk/transport_lp.hpp"

namespace specrisk {

/// Vector-valued payout b = (b_1, ..., b_n): components share the variables
/// and the domain box.
struct VectorPayout {
    std::vector<Payout> components;

    int arity() const { return components.empty() ? 0 : components.front().arity(); }
    int output_dim() const { return static_cast<int>(components.size()); }

    void validate() const {
        if (components.empty()) throw config_error("vector payout needs at least one component");
        for (const auto& c : components) {
            if (c.arity() != components.front().arity())
                throw config_error("vector payout components disagree on arity");
            if (c.domain() != components.front().domain())
                throw config_error("vector payout components disagree on the domain box");
        }
    }

    std::vector<double> eval(std::span<const double> x) const {
        std::vector<double> z(components.size());
        for (std::size_t j = 0; j < components.size(); ++j) z[j] = components[j](x);
        return z;
    }
};

/// Weighted points in R^n.
struct PointCloud {
    std::vector<std::vector<double>> points;
    std::vector<double> weights;

    int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }

    void validate() const {
        if (points.empty() || points.size() != weights.size())
            throw config_error("point cloud needs matching points and weights");
        for (const auto& p : points)
            if (static_cast<int>(p.size()) != dim())
                throw config_error("point cloud has inconsistent dimensions");
        double total = pairwise_sum(weights);
        if (std::abs(total - 1.0) > 1e-10)
            throw config_error("point cloud weights must sum to 1");
    }

    std::vector<double> mean() const {
        std::vector<double> m(static_cast<std::size_t>(dim()), 0.0);
        for (std::size_t k = 0; k < points.size(); ++k)
            for (std::size_t j = 0; j < m.size(); ++j) m[j] += weights[k] * points[k][j];
        return m;
    }
};

/// A baseline measure concentrated on a monotone curve f: [0,1] -> R^n,
/// stored through its component maps (each a nondecreasing, nonnegative
/// spectral-style function).
struct Curve {
    std::vector<SpectralFunction> components;

    int dim() const { return static_cast<int>(components.size()); }

    std::vector<double> at(double m) const {
        std::vector<double> y(components.size());
        for (std::size_t j = 0; j < components.size(); ++j) y[j] = components[j](m);
        return y;
    }

    /// The pushforward f_# Leb as a point cloud; exact when every component is
    /// piecewise constant (cells of the common refinement), midpoint
    /// quantization on `n` cells otherwise.
    PointCloud discretized(int n = 256) const {
        PointCloud cloud;
        bool exact = true;
        for (const auto& f : components) exact = exact && f.is_piecewise_constant();
        std::vector<double> cuts;
        if (exact) {
            for (const auto& f : components) {
                auto bp = f.breakpoints();
                cuts.insert(cuts.end(), bp.begin(), bp.end());
            }
        } else {
            for (int k = 1; k < n; ++k) cuts.push_back(static_cast<double>(k) / n);
        }
        cuts.push_back(1.0);
        std::sort(cuts.begin(), cuts.end());
        double prev = 0.0;
        for (double m : cuts) {
            if (m <= prev) continue;
            cloud.points.push_back(at(0.5 * (prev + m)));
            cloud.weights.push_back(m - prev);
            prev = m;
        }
        // Merge equal consecutive points so the cloud is a genuine atom list.
        PointCloud merged;
        for (std::size_t k = 0; k < cloud.points.size(); ++k) {
            if (!merged.points.empty() && merged.points.back() == cloud.points[k])
                merged.weights.back() += cloud.weights[k];
            else {
                merged.points.push_back(cloud.points[k]);
                merged.weights.push_back(cloud.weights[k]);
            }
        }
        return merged;
    }
};

/// Maximal correlation risk between two point clouds: the exact LP value of
/// max int z . y d eta over couplings of eta and nu.
inline double maximal_correlation_risk(const PointCloud& nu, const PointCloud& eta) {
    nu.validate();
    eta.validate();
    if (nu.dim() != eta.dim())
        throw config_error("maximal_correlation_risk: clouds live in different dimensions");
    if (nu.dim() > 6) throw config_error("maximal_correlation_risk supports dimension <= 6");
    LpSolution sol = solve_transport_lp(
        {nu.weights, eta.weights},
        [&](std::span<const int> t) {
            const auto& a = nu.points[static_cast<std::size_t>(t[0])];
            const auto& z = eta.points[static_cast<std::size_t>(t[1])];
            double dot = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * z[j];
            return dot;
        });
    if (sol.status != LpStatus::optimal)
        throw numerical_error("maximal_correlation_risk: LP did not reach optimality");
    return sol.value;
}

/// Curve-concentrated baseline: the surplus sum_j b_j(x) f_j(m) is
/// supermodular in (m, x_1, ..., x_d) when every component payout is
/// supermodular and increasing, so the comonotone coupling of
/// (Leb, mu_1, ..., mu_d) is optimal and the value is the one-dimensional
/// integral of the composed inner product.
inline ComonotoneSolution solve_curve_case(const Curve& f, const VectorPayout& b,
                                           const std::vector<Marginal>& marginals,
                                           int grid_per_axis = 0, int support_rows = 201) {
    b.validate();
    if (f.dim() != b.output_dim())
        throw config_error("curve dimension and payout output dimension disagree");
    if (static_cast<int>(marginals.size()) != b.arity())
        throw config_error("solve_curve_case: arity mismatch");

    for (int j = 0; j < b.output_dim(); ++j) {
        const Payout& bj = b.components[static_cast<std::size_t>(j)];
        const SignStructure signs = mixed_partial_signs(bj, grid_per_axis);
        for (int i = 0; i < bj.arity(); ++i) {
            const Sign s0 = signs.sigma0[static_cast<std::size_t>(i)];
            if (s0 == Sign::minus || s0 == Sign::mixed)
                throw hypothesis_error("component " + std::to_string(j + 1) +
                                       " is not increasing in " +
                                       bj.var_names()[static_cast<std::size_t>(i)]);
            for (int k = i + 1; k < bj.arity(); ++k) {
                const Sign s = signs.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                if (s == Sign::minus || s == Sign::mixed)
                    throw hypothesis_error("component " + std::to_string(j + 1) +
                                           " is not supermodular in (" +
                                           bj.var_names()[static_cast<std::size_t>(i)] + ", " +
                                           bj.var_names()[static_cast<std::size_t>(k)] + ")");
            }
        }
    }

    ComonotoneSolution sol;
    sol.G = build_G(marginals, {});
    sol.structure.s_plus.resize(marginals.size() + 1);
    for (std::size_t i = 0; i <= marginals.size(); ++i)
        sol.structure.s_plus[i] = static_cast<int>(i);
    sol.structure.verdict = Verdict::weakly_compatible;

    bool exact = true;
    for (const auto& fj : f.components) exact = exact && fj.is_piecewise_constant();
    for (const auto& g : sol.G) exact = exact && g.mu.is_discrete();

    std::vector<double> cuts;
    for (const auto& fj : f.components) {
        auto bp = fj.breakpoints();
        cuts.insert(cuts.end(), bp.begin(), bp.end());
    }
    for (const auto& g : sol.G) {
        auto bp = g.breakpoints();
        cuts.insert(cuts.end(), bp.begin(), bp.end());
    }

    std::vector<double> x(marginals.size());
    auto integrand = [&](double m) {
        for (std::size_t i = 0; i < sol.G.size(); ++i) x[i] = sol.G[i](m);
        double acc = 0.0;
        for (int j = 0; j < b.output_dim(); ++j)
            acc += f.components[static_cast<std::size_t>(j)](m) *
                   b.components[static_cast<std::size_t>(j)](x);
        return acc;
    };
    sol.value = exact ? detail::integrate_exact_steps(integrand, std::move(cuts))
                      : integrate_unit(integrand, std::move(cuts));

    sol.support_header.push_back("m");
    for (const auto& name : b.components.front().var_names()) sol.support_header.push_back(name);
    for (int j = 1; j <= b.output_dim(); ++j) sol.support_header.push_back("b" + std::to_string(j));
    for (int r = 0; r < support_rows; ++r) {
        const double m = support_rows > 1 ? static_cast<double>(r) / (support_rows - 1) : 0.5;
        std::vector<double> row = {m};
        for (std::size_t i = 0; i < sol.G.size(); ++i) {
            x[i] = sol.G[i](m);
            row.push_back(x[i]);
        }
        for (const auto& bj : b.components) row.push_back(bj(x));
        sol.support_sample.push_back(std::move(row));
    }
    return sol;
}

/// LP oracle for the curve case: couple the discretized curve with the
/// marginals under the surplus b(x) . y.
inline LpSolution solve_curve_lifted_lp(const Curve& f, const VectorPayout& b,
                                        const std::vector<Marginal>& marginals,
                                        const TransportLpOptions& opt = {},
                                        int curve_cells = 256) {
    b.validate();
    const PointCloud nu = f.discretized(curve_cells);
    std::vector<std::vector<double>> weights;
    weights.push_back(nu.weights);
    for (const auto& mu : marginals) {
        if (!mu.is_discrete())
            throw config_error("solve_curve_lifted_lp requires discrete marginals");
        weights.emplace_back(mu.atom_weights().begin(), mu.atom_weights().end());
    }
    std::vector<double> x(marginals.size());
    return solve_transport_lp(
        weights,
        [&](std::span<const int> t) {
            for (std::size_t k = 0; k < marginals.size(); ++k)
                x[k] = marginals[k].atom_locations()[static_cast<std::size_t>(t[k + 1])];
            const auto& y = nu.points[static_cast<std::size_t>(t[0])];
            double dot = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j)
                dot += y[j] * b.components[j](x);
            return dot;
        },
        opt);
}

struct InvertibilityReport {
    int total_points = 0;
    double min_abs_det = std::numeric_limits<double>::infinity();
    int flagged = 0;  // |det| below 1e-8 * local Hadamard scale
    std::vector<std::vector<double>> flagged_points;
};

/// Square-case hypothesis probe: finite-difference Jacobian of b over the
/// probe grid, reporting the smallest |det| and near-singular points. The
/// local scale is the Hadamard bound (product of row norms), so the flag is
/// invariant under rescaling the components.
inline InvertibilityReport invertibility_probe(const VectorPayout& b, int grid_per_axis = 0) {
    b.validate();
    const int d = b.arity();
    const int n = b.output_dim();
    if (d != n) throw config_error("invertibility_probe handles the square case only");
    if (n > 6) throw config_error("invertibility_probe supports dimension <= 6");
    if (grid_per_axis == 0) grid_per_axis = default_grid_per_axis(d);

    const Payout& b0 = b.components.front();
    const auto grid = detail::probe_grid(b0, grid_per_axis);
    std::vector<double> h(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const auto& [lo, hi] = b0.domain()[static_cast<std::size_t>(i)];
        if (hi <= lo)
            throw config_error("invertibility probe needs a non-degenerate box on every axis");
        h[static_cast<std::size_t>(i)] = (hi - lo) / (4.0 * grid_per_axis);
    }

    InvertibilityReport rep;
    std::vector<double> J(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
    std::vector<double> xp, xm;
    for (const auto& x : grid) {
        ++rep.total_points;
        double hadamard = 1.0;
        for (int j = 0; j < n; ++j) {
            double row_norm2 = 0.0;
            for (int i = 0; i < d; ++i) {
                xp = x;
                xm = x;
                xp[static_cast<std::size_t>(i)] += h[static_cast<std::size_t>(i)];
                xm[static_cast<std::size_t>(i)] -= h[static_cast<std::size_t>(i)];
                const Payout& bj = b.components[static_cast<std::size_t>(j)];
                const double v = (detail::guarded_eval(bj, xp) - detail::guarded_eval(bj, xm)) /
                                 (2.0 * h[static_cast<std::size_t>(i)]);
                J[static_cast<std::size_t>(j) * d + i] = v;
                row_norm2 += v * v;
            }
            hadamard *= std::sqrt(row_norm2);
        }
        // |det| by Gaussian elimination with partial pivoting.
        std::vector<double> W = J;
        double det = 1.0;
        for (int c = 0; c < n; ++c) {
            int piv = c;
            for (int r = c + 1; r < n; ++r)
                if (std::abs(W[static_cast<std::size_t>(r) * d + c]) >
                    std::abs(W[static_cast<std::size_t>(piv) * d + c]))
                    piv = r;
            const double pv = W[static_cast<std::size_t>(piv) * d + c];
            if (pv == 0.0) {
                det = 0.0;
                break;
            }
            if (piv != c)
                for (int cc = 0; cc < n; ++cc)
                    std::swap(W[static_cast<std::size_t>(piv) * d + cc],
                              W[static_cast<std::size_t>(c) * d + cc]);
            det *= pv;
            for (int r = c + 1; r < n; ++r) {
                const double fct = W[static_cast<std::size_t>(r) * d + c] / pv;
                for (int cc = c; cc < n; ++cc)
                    W[static_cast<std::size_t>(r) * d + cc] -=
                        fct * W[static_cast<std::size_t>(c) * d + cc];
            }
        }
        const double ad = std::abs(det);
        rep.min_abs_det = std::min(rep.min_abs_det, ad);
        if (ad < 1e-8 * std::max(hadamard, 1e-300)) {
            ++rep.flagged;
            if (rep.flagged_points.size() < 16) rep.flagged_points.push_back(x);
        }
    }
    return rep;
}

}  // namespace specrisk
