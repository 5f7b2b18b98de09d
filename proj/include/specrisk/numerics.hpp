#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "specrisk/errors.hpp"

namespace specrisk {

/// Deterministic pairwise summation; result is independent of how callers
/// chunk their work as long as the element order is fixed.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
/// iteration on the Legendre recurrence (accurate to ~1e-15).
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int order) {
        nodes.resize(order);
        weights.resize(order);
        const int n = order;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                pp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
        }
    }

    static const GaussLegendre& order32() {
        static const GaussLegendre gl(32);
        return gl;
    }
};

namespace detail {

inline double gl_segment(const std::function<double(double)>& f, double a, double b) {
    const auto& gl = GaussLegendre::order32();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::vector<double> terms(gl.nodes.size());
    for (std::size_t k = 0; k < gl.nodes.size(); ++k)
        terms[k] = gl.weights[k] * f(mid + half * gl.nodes[k]);
    return half * pairwise_sum(terms);
}

}  // namespace detail

/// Composite Gauss-Legendre integration of f over [0,1]. Segments are split
/// at every supplied breakpoint so known kinks never sit inside a panel; each
/// panel is then accepted when one 32-node pass agrees with its two halves
/// (local Richardson check) and bisected otherwise, which also resolves
/// endpoint singularities such as sqrt-type quantiles. Throws when the
/// unresolved residual at the depth cap still exceeds the tolerance.
inline double integrate_unit(const std::function<double(double)>& f,
                             std::vector<double> breakpoints, double rel_tol = 1e-10,
                             int max_depth = 44) {
    breakpoints.push_back(0.0);
    breakpoints.push_back(1.0);
    std::sort(breakpoints.begin(), breakpoints.end());
    std::vector<double> cuts;
    for (double m : breakpoints) {
        m = std::clamp(m, 0.0, 1.0);
        if (cuts.empty() || m > cuts.back() + 1e-15) cuts.push_back(m);
    }
    if (cuts.size() < 2) return 0.0;

    double coarse = 0.0;
    std::vector<double> coarse_parts(cuts.size() - 1);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        coarse_parts[i] = detail::gl_segment(f, cuts[i], cuts[i + 1]);
    coarse = pairwise_sum(coarse_parts);
    const double tol_abs = rel_tol * std::max(1.0, std::abs(coarse));

    struct Panel {
        double a, b, whole, tol;
        int depth;
    };
    std::vector<Panel> stack;
    for (std::size_t i = cuts.size() - 1; i-- > 0;)
        stack.push_back({cuts[i], cuts[i + 1], coarse_parts[i],
                         tol_abs * (cuts[i + 1] - cuts[i]), 0});

    double total = 0.0, unresolved = 0.0;
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (p.a + p.b);
        const double left = detail::gl_segment(f, p.a, mid);
        const double right = detail::gl_segment(f, mid, p.b);
        const double diff = std::abs(left + right - p.whole);
        const double noise = 1e-13 * (std::abs(left) + std::abs(right) + std::abs(p.whole));
        if (diff <= std::max(p.tol, noise)) {
            total += left + right;
        } else if (p.depth >= max_depth) {
            total += left + right;
            unresolved += diff;
        } else {
            stack.push_back({mid, p.b, right, 0.5 * p.tol, p.depth + 1});
            stack.push_back({p.a, mid, left, 0.5 * p.tol, p.depth + 1});
        }
    }
    if (unresolved > 100.0 * tol_abs)
        throw numerical_error("quadrature did not reach tolerance; estimate " +
                              std::to_string(total) + " with unresolved residual " +
                              std::to_string(unresolved));
    return total;
}

/// inf{x in [lo,hi] : cdf(x) >= m} by bisection, to absolute tolerance xtol in x.
inline double bisect_quantile(const std::function<double(double)>& cdf, double m, double lo,
                              double hi, double xtol = 1e-12) {
    if (cdf(lo) >= m) return lo;
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > xtol; ++it) {
        const double mid = 0.5 * (a + b);
        if (cdf(mid) >= m)
            b = mid;
        else
            a = mid;
    }
    return b;
}

}  // namespace specrisk
