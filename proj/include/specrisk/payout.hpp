#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/expr.hpp"

namespace specrisk {

/// A scalar payout b(x_1, ..., x_d): parsed expression, arity, and the box the
/// instance lives on. Construction probes a coarse grid to make sure the
/// expression is finite everywhere on the box.
class Payout {
public:
    Payout(expr::Node ast, std::vector<std::array<double, 2>> domain,
           std::vector<std::string> var_names)
        : ast_(std::move(ast)), domain_(std::move(domain)), names_(std::move(var_names)) {
        if (domain_.empty()) throw config_error("payout needs at least one variable");
        if (names_.size() != domain_.size())
            throw config_error("payout variable names and domain box disagree on arity");
        for (const auto& [lo, hi] : domain_)
            if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
                throw config_error("payout domain box must consist of finite intervals");
        probe_finiteness();
    }

    int arity() const { return static_cast<int>(domain_.size()); }
    const std::vector<std::array<double, 2>>& domain() const { return domain_; }
    const std::vector<std::string>& var_names() const { return names_; }
    const expr::Node& ast() const { return ast_; }

    double operator()(std::span<const double> x) const { return expr::eval(ast_, x); }

    bool has_kinks() const { return expr::has_kinks(ast_); }

    /// The payout with x_i replaced by -x_i (domain interval mirrored).
    Payout with_flipped_variable(int i) const {
        std::vector<std::array<double, 2>> dom = domain_;
        dom[static_cast<std::size_t>(i)] = {-domain_[static_cast<std::size_t>(i)][1],
                                            -domain_[static_cast<std::size_t>(i)][0]};
        return Payout(expr::flip_variable(ast_, i), std::move(dom), names_);
    }

private:
    void probe_finiteness() const {
        const int d = arity();
        int g = 2;
        while (std::pow(g + 1, d) <= 729.0) ++g;
        std::vector<double> x(static_cast<std::size_t>(d));
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            for (int i = 0; i < d; ++i) {
                const auto& [lo, hi] = domain_[static_cast<std::size_t>(i)];
                x[static_cast<std::size_t>(i)] = lo + (hi - lo) * (idx[static_cast<std::size_t>(i)] + 0.5) / g;
            }
            double v;
            try {
                v = expr::eval(ast_, x);
            } catch (const expr::eval_error& e) {
                throw config_error(std::string("payout undefined inside its domain box: ") +
                                   e.what() + point_string(x));
            }
            if (!std::isfinite(v))
                throw config_error("payout is non-finite inside its domain box" + point_string(x));
            int i = d - 1;
            while (i >= 0) {
                if (++idx[static_cast<std::size_t>(i)] < g) break;
                idx[static_cast<std::size_t>(i)] = 0;
                --i;
            }
            if (i < 0) break;
        }
    }

    static std::string point_string(std::span<const double> x) {
        std::string s = " at (";
        for (std::size_t i = 0; i < x.size(); ++i)
            s += (i ? ", " : "") + std::to_string(x[i]);
        return s + ")";
    }

    expr::Node ast_;
    std::vector<std::array<double, 2>> domain_;
    std::vector<std::string> names_;
};

inline Payout parse_payout(const std::string& source, int d,
                           std::vector<std::array<double, 2>> domain,
                           std::vector<std::string> var_names = {}) {
    if (d < 1) throw config_error("payout arity must be at least 1");
    if (var_names.empty()) {
        for (int i = 1; i <= d; ++i) var_names.push_back("x" + std::to_string(i));
    }
    if (static_cast<int>(var_names.size()) != d)
        throw config_error("expected " + std::to_string(d) + " variable names");
    expr::Node ast = expr::parse(source, var_names);
    return Payout(std::move(ast), std::move(domain), std::move(var_names));
}

enum class Sign { zero, plus, minus, mixed };

enum class Monotonicity {
    strict_increasing,
    increasing,
    constant,
    decreasing,
    strict_decreasing,
    non_monotone,
};

inline const char* to_string(Sign s) {
    switch (s) {
        case Sign::zero: return "0";
        case Sign::plus: return "+";
        case Sign::minus: return "-";
        case Sign::mixed: return "mixed";
    }
    return "?";
}

inline const char* to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::strict_increasing: return "strict-increasing";
        case Monotonicity::increasing: return "increasing";
        case Monotonicity::constant: return "constant";
        case Monotonicity::decreasing: return "decreasing";
        case Monotonicity::strict_decreasing: return "strict-decreasing";
        case Monotonicity::non_monotone: return "non-monotone";
    }
    return "?";
}

enum class Verdict { strictly_compatible, weakly_compatible, incompatible };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::strictly_compatible: return "StrictlyCompatible";
        case Verdict::weakly_compatible: return "WeaklyCompatible";
        case Verdict::incompatible: return "Incompatible";
    }
    return "?";
}

/// Sign pattern of the lifted surplus s = x0 * b on {0, 1, ..., d}:
/// sigma holds the probed signs of the mixed partials of b (variables 1..d,
/// stored 0-based), sigma0 the signs of the first partials of b (which are the
/// mixed partials of s against the spectral axis), and monotonicity the
/// per-variable classification derived from the same first differences.
struct SignStructure {
    std::vector<std::vector<Sign>> sigma;
    std::vector<Sign> sigma0;
    std::vector<Monotonicity> monotonicity;

    std::vector<int> s_plus, s_minus;  // partition of {0, ..., d}, 0 in s_plus
    Verdict verdict = Verdict::weakly_compatible;

    struct Witness {
        std::vector<int> indices;    // offending pair/triple/cycle, 0 = spectral axis
        std::vector<double> point;   // probe point, when the witness is pointwise
        std::string detail;
    };
    std::optional<Witness> witness;
};

namespace detail {

struct SignVote {
    int pos = 0, neg = 0, zero = 0;
    std::vector<double> pos_point, neg_point;

    void add(double v, double tol, std::span<const double> x) {
        if (v > tol) {
            ++pos;
            if (pos_point.empty()) pos_point.assign(x.begin(), x.end());
        } else if (v < -tol) {
            ++neg;
            if (neg_point.empty()) neg_point.assign(x.begin(), x.end());
        } else {
            ++zero;
        }
    }

    int samples() const { return pos + neg + zero; }

    Sign sign() const {
        if (samples() == 0) return Sign::zero;  // everything straddled a kink
        if (pos > 0 && neg > 0) return Sign::mixed;
        if (pos == samples()) return Sign::plus;
        if (neg == samples()) return Sign::minus;
        return pos > 0 ? Sign::plus : (neg > 0 ? Sign::minus : Sign::zero);
    }

    bool is_strict() const { return samples() > 0 && (pos == samples() || neg == samples()); }
};

inline std::vector<std::vector<double>> probe_grid(const Payout& b, int grid_per_axis) {
    const int d = b.arity();
    const int g = grid_per_axis;
    std::vector<std::vector<double>> pts;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    while (true) {
        for (int i = 0; i < d; ++i) {
            const auto& [lo, hi] = b.domain()[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] = lo + (hi - lo) * (idx[static_cast<std::size_t>(i)] + 0.5) / g;
        }
        pts.push_back(x);
        int i = d - 1;
        while (i >= 0) {
            if (++idx[static_cast<std::size_t>(i)] < g) break;
            idx[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return pts;
}

inline double guarded_eval(const Payout& b, std::span<const double> x) {
    try {
        return b(x);
    } catch (const expr::eval_error& e) {
        std::string s = std::string("payout evaluation failed during probing: ") + e.what() + " at (";
        for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + std::to_string(x[i]);
        throw config_error(s + ")");
    }
}

}  // namespace detail

/// Default per-axis probe resolution: as fine as a ~4096-point tensor grid
/// allows, never below 3.
inline int default_grid_per_axis(int d) {
    int g = 3;
    while (std::pow(g + 1, d) <= 4096.0) ++g;
    return g;
}

/// Probe the signs of the mixed second partials and first partials of b by
/// central finite differences on a tensor grid (step h = width/(4*grid)).
/// A sample votes '+' / '-' / '0' against tol = 1e-9 * scale(b); stencils that
/// straddle a kink of the expression (max/min/abs/relu argument changing sign
/// across the stencil) are excluded from the vote.
inline SignStructure mixed_partial_signs(const Payout& b, int grid_per_axis = 0) {
    const int d = b.arity();
    if (grid_per_axis == 0) grid_per_axis = default_grid_per_axis(d);
    if (grid_per_axis < 3) throw config_error("mixed_partial_signs needs grid_per_axis >= 3");

    const auto grid = detail::probe_grid(b, grid_per_axis);
    std::vector<double> h(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const auto& [lo, hi] = b.domain()[static_cast<std::size_t>(i)];
        h[static_cast<std::size_t>(i)] = (hi - lo) / (4.0 * grid_per_axis);
    }

    double scale = 1.0;
    for (const auto& x : grid) scale = std::max(scale, std::abs(detail::guarded_eval(b, x)));
    const double tol = 1e-9 * scale;

    const bool kinky = b.has_kinks();
    std::vector<int> sig_a, sig_b;
    auto same_signature = [&](std::span<const double> xa, std::span<const double> xb) {
        if (!kinky) return true;
        sig_a.clear();
        sig_b.clear();
        expr::kink_signature(b.ast(), xa, sig_a);
        expr::kink_signature(b.ast(), xb, sig_b);
        return sig_a == sig_b;
    };

    SignStructure out;
    out.sigma.assign(static_cast<std::size_t>(d), std::vector<Sign>(static_cast<std::size_t>(d), Sign::zero));
    out.sigma0.resize(static_cast<std::size_t>(d));
    out.monotonicity.resize(static_cast<std::size_t>(d));

    std::vector<detail::SignVote> first(static_cast<std::size_t>(d));
    std::vector<double> xp, xm, xpp, xpm, xmp, xmm;
    for (const auto& x : grid) {
        for (int i = 0; i < d; ++i) {
            if (h[static_cast<std::size_t>(i)] == 0.0) continue;  // degenerate axis
            xp = x;
            xm = x;
            xp[static_cast<std::size_t>(i)] += h[static_cast<std::size_t>(i)];
            xm[static_cast<std::size_t>(i)] -= h[static_cast<std::size_t>(i)];
            if (!same_signature(xp, xm)) continue;
            const double diff =
                (detail::guarded_eval(b, xp) - detail::guarded_eval(b, xm)) / (2.0 * h[static_cast<std::size_t>(i)]);
            first[static_cast<std::size_t>(i)].add(diff, tol, x);
        }
    }
    for (int i = 0; i < d; ++i) {
        const auto& v = first[static_cast<std::size_t>(i)];
        out.sigma0[static_cast<std::size_t>(i)] = v.sign();
        switch (v.sign()) {
            case Sign::plus:
                out.monotonicity[static_cast<std::size_t>(i)] =
                    v.is_strict() ? Monotonicity::strict_increasing : Monotonicity::increasing;
                break;
            case Sign::minus:
                out.monotonicity[static_cast<std::size_t>(i)] =
                    v.is_strict() ? Monotonicity::strict_decreasing : Monotonicity::decreasing;
                break;
            case Sign::zero:
                out.monotonicity[static_cast<std::size_t>(i)] = Monotonicity::constant;
                break;
            case Sign::mixed:
                out.monotonicity[static_cast<std::size_t>(i)] = Monotonicity::non_monotone;
                break;
        }
    }

    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            detail::SignVote vote;
            const double hi_ = h[static_cast<std::size_t>(i)], hj = h[static_cast<std::size_t>(j)];
            if (hi_ == 0.0 || hj == 0.0) continue;  // degenerate axis: no interaction
            for (const auto& x : grid) {
                xpp = x;
                xpm = x;
                xmp = x;
                xmm = x;
                xpp[static_cast<std::size_t>(i)] += hi_;
                xpp[static_cast<std::size_t>(j)] += hj;
                xpm[static_cast<std::size_t>(i)] += hi_;
                xpm[static_cast<std::size_t>(j)] -= hj;
                xmp[static_cast<std::size_t>(i)] -= hi_;
                xmp[static_cast<std::size_t>(j)] += hj;
                xmm[static_cast<std::size_t>(i)] -= hi_;
                xmm[static_cast<std::size_t>(j)] -= hj;
                if (!same_signature(xpp, xmm) || !same_signature(xpm, xmp) ||
                    !same_signature(xpp, xpm))
                    continue;
                const double dd = (detail::guarded_eval(b, xpp) - detail::guarded_eval(b, xpm) -
                                   detail::guarded_eval(b, xmp) + detail::guarded_eval(b, xmm)) /
                                  (4.0 * hi_ * hj);
                vote.add(dd, tol, x);
            }
            const Sign s = vote.sign();
            out.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
            out.sigma[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = s;
            if (s == Sign::mixed && !out.witness) {
                SignStructure::Witness w;
                w.indices = {i + 1, j + 1};
                w.point = vote.neg_point.empty() ? vote.pos_point : vote.neg_point;
                w.detail = "mixed partial changes sign on the probe grid";
                out.witness = std::move(w);
            }
        }
    }
    return out;
}

/// Two-color the sign graph on {0, 1, ..., d}: a '+' edge forces equal sides,
/// a '-' edge opposite sides; vertex 0 is the spectral axis whose edges are
/// the monotonicity signs of b (dropped when the spectral function is
/// constant, because then x0 is degenerate and those interactions vanish).
/// Success yields the partition (S+, S-) and a Strictly/WeaklyCompatible
/// verdict; failure yields Incompatible plus an odd-signed witness.
inline SignStructure classify_compatibility(SignStructure signs, bool alpha_varies) {
    const int d = static_cast<int>(signs.sigma.size());
    const int n = d + 1;

    auto edge = [&](int a, int c) -> Sign {
        if (a > c) std::swap(a, c);
        if (a == 0) return alpha_varies ? signs.sigma0[static_cast<std::size_t>(c - 1)] : Sign::zero;
        return signs.sigma[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(c - 1)];
    };

    signs.s_plus.clear();
    signs.s_minus.clear();

    // Mixed entries defeat the constant-sign requirement outright.
    for (int a = 0; a < n; ++a) {
        for (int c = a + 1; c < n; ++c) {
            if (edge(a, c) == Sign::mixed) {
                signs.verdict = Verdict::incompatible;
                if (!signs.witness) {
                    SignStructure::Witness w;
                    w.indices = {a, c};
                    w.detail = "interaction sign is not constant over the box";
                    signs.witness = std::move(w);
                }
                return signs;
            }
        }
    }

    std::vector<int> color(static_cast<std::size_t>(n), 0);
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    bool conflict = false;
    std::vector<int> conflict_pair;
    for (int root = 0; root < n && !conflict; ++root) {
        if (color[static_cast<std::size_t>(root)] != 0) continue;
        color[static_cast<std::size_t>(root)] = 1;
        std::vector<int> stack = {root};
        while (!stack.empty() && !conflict) {
            const int a = stack.back();
            stack.pop_back();
            for (int c = 0; c < n; ++c) {
                if (c == a) continue;
                const Sign s = edge(a, c);
                if (s == Sign::zero) continue;
                const int want = (s == Sign::plus) ? color[static_cast<std::size_t>(a)]
                                                   : -color[static_cast<std::size_t>(a)];
                if (color[static_cast<std::size_t>(c)] == 0) {
                    color[static_cast<std::size_t>(c)] = want;
                    parent[static_cast<std::size_t>(c)] = a;
                    stack.push_back(c);
                } else if (color[static_cast<std::size_t>(c)] != want) {
                    conflict = true;
                    conflict_pair = {a, c};
                    break;
                }
            }
        }
    }

    if (conflict) {
        signs.verdict = Verdict::incompatible;
        SignStructure::Witness w;
        // Prefer a three-index witness: a triple whose pairwise sign product is negative.
        for (int a = 0; a < n && w.indices.empty(); ++a)
            for (int bb = a + 1; bb < n && w.indices.empty(); ++bb)
                for (int c = bb + 1; c < n; ++c) {
                    auto val = [&](Sign s) { return s == Sign::plus ? 1 : (s == Sign::minus ? -1 : 0); };
                    if (val(edge(a, bb)) * val(edge(bb, c)) * val(edge(a, c)) < 0) {
                        w.indices = {a, bb, c};
                        break;
                    }
                }
        if (w.indices.empty()) {
            // Odd cycle longer than a triangle: walk the BFS tree between the endpoints.
            w.indices = conflict_pair;
            int p = parent[static_cast<std::size_t>(conflict_pair[0])];
            while (p >= 0) {
                w.indices.push_back(p);
                p = parent[static_cast<std::size_t>(p)];
            }
        }
        w.detail = "sign graph admits no two-coloring (odd-signed cycle)";
        signs.witness = std::move(w);
        return signs;
    }

    for (int a = 0; a < n; ++a)
        (color[static_cast<std::size_t>(a)] >= 0 ? signs.s_plus : signs.s_minus).push_back(a);

    bool strict = true;
    for (int a = alpha_varies ? 0 : 1; a < n; ++a)
        for (int c = a + 1; c < n; ++c)
            if (edge(a, c) == Sign::zero) strict = false;
    signs.verdict = strict ? Verdict::strictly_compatible : Verdict::weakly_compatible;
    return signs;
}

/// Checker for the graph-structure condition in two n-dimensional blocks:
/// at probe points, the mixed Hessian block must be non-singular and the
/// quadratic form grad_2 b . [D^2_{12} b]^{-1} grad_1 b must be positive.
struct TwistReport {
    int total_points = 0;
    int passing = 0;
    int singular = 0;
    double worst_value = std::numeric_limits<double>::infinity();
    bool degenerate = false;  // mixed Hessian singular at every probe point

    double fraction_pass() const {
        return total_points ? static_cast<double>(passing) / total_points : 0.0;
    }
};

inline TwistReport twist_condition_check(const Payout& b, int block_dim, int grid_per_axis = 0) {
    const int n = block_dim;
    if (n < 1 || n > 4) throw config_error("twist check supports block dimension 1..4");
    if (b.arity() != 2 * n)
        throw config_error("twist check expects a payout on two blocks of dimension " +
                           std::to_string(n));
    if (grid_per_axis == 0) grid_per_axis = default_grid_per_axis(2 * n);
    if (grid_per_axis < 3) throw config_error("twist check needs grid_per_axis >= 3");

    const auto grid = detail::probe_grid(b, grid_per_axis);
    std::vector<double> h(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) {
        const auto& [lo, hi] = b.domain()[static_cast<std::size_t>(i)];
        if (hi <= lo) throw config_error("twist check needs a non-degenerate box on every axis");
        h[static_cast<std::size_t>(i)] = (hi - lo) / (4.0 * grid_per_axis);
    }

    TwistReport rep;
    std::vector<double> xa, xb;
    for (const auto& x : grid) {
        ++rep.total_points;
        auto d1 = [&](int i) {
            xa = x;
            xb = x;
            xa[static_cast<std::size_t>(i)] += h[static_cast<std::size_t>(i)];
            xb[static_cast<std::size_t>(i)] -= h[static_cast<std::size_t>(i)];
            return (detail::guarded_eval(b, xa) - detail::guarded_eval(b, xb)) /
                   (2.0 * h[static_cast<std::size_t>(i)]);
        };
        std::vector<double> g1(static_cast<std::size_t>(n)), g2(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r) g1[static_cast<std::size_t>(r)] = d1(r);
        for (int l = 0; l < n; ++l) g2[static_cast<std::size_t>(l)] = d1(n + l);

        std::vector<double> M(static_cast<std::size_t>(n) * n);
        double mscale = 0.0;
        for (int r = 0; r < n; ++r) {
            for (int l = 0; l < n; ++l) {
                std::vector<double> xpp = x, xpm = x, xmp = x, xmm = x;
                const double hr = h[static_cast<std::size_t>(r)], hl = h[static_cast<std::size_t>(n + l)];
                xpp[static_cast<std::size_t>(r)] += hr;
                xpp[static_cast<std::size_t>(n + l)] += hl;
                xpm[static_cast<std::size_t>(r)] += hr;
                xpm[static_cast<std::size_t>(n + l)] -= hl;
                xmp[static_cast<std::size_t>(r)] -= hr;
                xmp[static_cast<std::size_t>(n + l)] += hl;
                xmm[static_cast<std::size_t>(r)] -= hr;
                xmm[static_cast<std::size_t>(n + l)] -= hl;
                const double v = (detail::guarded_eval(b, xpp) - detail::guarded_eval(b, xpm) -
                                  detail::guarded_eval(b, xmp) + detail::guarded_eval(b, xmm)) /
                                 (4.0 * hr * hl);
                M[static_cast<std::size_t>(r) * n + l] = v;
                mscale = std::max(mscale, std::abs(v));
            }
        }

        // Solve M z = g1 by Gaussian elimination with partial pivoting.
        std::vector<double> z = g1;
        std::vector<double> W = M;
        bool singular = (mscale == 0.0);
        for (int colp = 0; colp < n && !singular; ++colp) {
            int piv = colp;
            for (int r = colp + 1; r < n; ++r)
                if (std::abs(W[static_cast<std::size_t>(r) * n + colp]) >
                    std::abs(W[static_cast<std::size_t>(piv) * n + colp]))
                    piv = r;
            if (std::abs(W[static_cast<std::size_t>(piv) * n + colp]) <= 1e-10 * std::max(1.0, mscale)) {
                singular = true;
                break;
            }
            if (piv != colp) {
                for (int cc = 0; cc < n; ++cc)
                    std::swap(W[static_cast<std::size_t>(piv) * n + cc], W[static_cast<std::size_t>(colp) * n + cc]);
                std::swap(z[static_cast<std::size_t>(piv)], z[static_cast<std::size_t>(colp)]);
            }
            for (int r = colp + 1; r < n; ++r) {
                const double f = W[static_cast<std::size_t>(r) * n + colp] / W[static_cast<std::size_t>(colp) * n + colp];
                for (int cc = colp; cc < n; ++cc)
                    W[static_cast<std::size_t>(r) * n + cc] -= f * W[static_cast<std::size_t>(colp) * n + cc];
                z[static_cast<std::size_t>(r)] -= f * z[static_cast<std::size_t>(colp)];
            }
        }
        if (singular) {
            ++rep.singular;
            continue;
        }
        for (int r = n - 1; r >= 0; --r) {
            for (int cc = r + 1; cc < n; ++cc)
                z[static_cast<std::size_t>(r)] -= W[static_cast<std::size_t>(r) * n + cc] * z[static_cast<std::size_t>(cc)];
            z[static_cast<std::size_t>(r)] /= W[static_cast<std::size_t>(r) * n + r];
        }
        double cond = 0.0;
        for (int l = 0; l < n; ++l) cond += g2[static_cast<std::size_t>(l)] * z[static_cast<std::size_t>(l)];
        rep.worst_value = std::min(rep.worst_value, cond);
        if (cond > 0.0) ++rep.passing;
    }
    rep.degenerate = (rep.singular == rep.total_points);
    if (rep.total_points == rep.singular) rep.worst_value = 0.0;
    return rep;
}

}  // namespace specrisk
