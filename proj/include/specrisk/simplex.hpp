#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/numerics.hpp"

namespace specrisk {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct SimplexOptions {
    long max_pivots = 1'000'000;
    double pivot_tol = 1e-11;
};

struct SimplexOutcome {
    LpStatus status = LpStatus::optimal;
    double value = 0.0;
    std::vector<double> x;     // primal solution, size n
    std::vector<double> dual;  // one multiplier per constraint row, size m
    long pivots = 0;
};

/**
 * Dense two-phase tableau simplex, maximizing c'x subject to A x = b, x >= 0.
 *
 * Bland's rule for both the entering and the leaving choice, so the pivot
 * sequence is deterministic and cannot cycle. Phase 1 starts from a full
 * artificial basis; the artificial columns double as an explicit B^{-1},
 * which is where the dual multipliers are read from at the end.
 *
 * A is row-major, m rows by n columns.
 */
inline SimplexOutcome simplex_equality_max(std::vector<double> A, std::vector<double> b,
                                           const std::vector<double>& c,
                                           const SimplexOptions& opt = {}) {
    const std::size_t m = b.size();
    const std::size_t n = c.size();
    if (A.size() != m * n) throw numerical_error("simplex: A has wrong shape");

    std::vector<int> row_sign(m, 1);
    for (std::size_t i = 0; i < m; ++i) {
        if (b[i] < 0.0) {
            row_sign[i] = -1;
            b[i] = -b[i];
            for (std::size_t j = 0; j < n; ++j) A[i * n + j] = -A[i * n + j];
        }
    }

    const std::size_t width = n + m + 1;  // original | artificial | rhs
    const std::size_t rhs = n + m;
    std::vector<double> T(m * width, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(A.begin() + static_cast<std::ptrdiff_t>(i * n),
                  A.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), T.begin() + static_cast<std::ptrdiff_t>(i * width));
        T[i * width + n + i] = 1.0;
        T[i * width + rhs] = b[i];
    }
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

    // Phase-1 reduced costs for maximizing -(sum of artificials): with the
    // artificial basis, rc_j = sum_i A_ij on original columns.
    std::vector<double> rc(width, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += T[i * width + j];
        rc[j] = s;
    }
    SimplexOutcome out;
    const double tol = opt.pivot_tol;

    auto pivot = [&](std::size_t prow, std::size_t ecol) {
        double* pr = &T[prow * width];
        const double piv = pr[ecol];
        for (std::size_t j = 0; j < width; ++j) pr[j] /= piv;
        pr[ecol] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == prow) continue;
            double* ri = &T[i * width];
            const double f = ri[ecol];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) ri[j] -= f * pr[j];
            ri[ecol] = 0.0;
        }
        const double f = rc[ecol];
        if (f != 0.0) {
            for (std::size_t j = 0; j < width; ++j) rc[j] -= f * pr[j];
            rc[ecol] = 0.0;
        }
        basis[prow] = ecol;
        ++out.pivots;
    };

    auto run = [&](std::size_t candidate_end) -> LpStatus {
        while (true) {
            if (out.pivots >= opt.max_pivots) return LpStatus::iteration_limit;
            std::size_t enter = width;
            for (std::size_t j = 0; j < candidate_end; ++j) {
                if (rc[j] > tol) {
                    enter = j;
                    break;
                }
            }
            if (enter == width) return LpStatus::optimal;
            std::size_t leave = m;
            double best_ratio = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double a = T[i * width + enter];
                if (a > tol) {
                    const double ratio = std::max(T[i * width + rhs], 0.0) / a;
                    if (leave == m || ratio < best_ratio - 1e-15 ||
                        (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
                        leave = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave == m) return LpStatus::unbounded;
            pivot(leave, enter);
        }
    };

    // ---- Phase 1 ----
    LpStatus st = run(n);
    if (st == LpStatus::iteration_limit) {
        out.status = st;
        return out;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] >= n) infeas += std::max(T[i * width + rhs], 0.0);
    if (infeas > 1e-9 * std::max(1.0, *std::max_element(b.begin(), b.end()))) {
        out.status = LpStatus::infeasible;
        return out;
    }
    // Drive leftover artificials (stuck at zero) out of the basis when possible;
    // a row with no eligible pivot column is redundant and stays inert.
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(T[i * width + j]) > tol) {
                pivot(i, j);
                break;
            }
        }
    }

    // ---- Phase 2 ----
    for (std::size_t j = 0; j < width; ++j) rc[j] = 0.0;
    for (std::size_t j = 0; j < n; ++j) rc[j] = c[j];
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] >= n) continue;
        const double cb = c[basis[i]];
        if (cb == 0.0) continue;
        const double* ri = &T[i * width];
        for (std::size_t j = 0; j < width; ++j) rc[j] -= cb * ri[j];
    }
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) rc[basis[i]] = 0.0;

    st = run(n);
    out.status = (st == LpStatus::optimal) ? LpStatus::optimal : st;
    if (st == LpStatus::unbounded) {
        out.status = LpStatus::unbounded;
        return out;
    }

    out.x.assign(n, 0.0);
    std::vector<double> value_terms;
    value_terms.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n) {
            const double v = std::max(T[i * width + rhs], 0.0);
            out.x[basis[i]] = v;
            value_terms.push_back(c[basis[i]] * v);
        }
    }
    out.value = pairwise_sum(value_terms);
    out.dual.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double y = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (basis[i] >= n) continue;
            const double cb = c[basis[i]];
            if (cb != 0.0) y += cb * T[i * width + n + j];
        }
        out.dual[j] = row_sign[j] * y;
    }
    return out;
}

}  // namespace specrisk
