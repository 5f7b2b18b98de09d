#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/numerics.hpp"

namespace specrisk {

/// A spectral function: nondecreasing, nonnegative, bounded alpha on [0,1].
/// Induces the spectral risk measure R_alpha(mu) = int_0^1 F_mu^{-1}(m) alpha(m) dm
/// and, as the pushforward alpha_# Leb_[0,1], the extra marginal of the MMOT lift.
///
/// Two representations: right-continuous piecewise-constant steps (exactness
/// carrier: all downstream discrete computations are closed-form for it) and
/// piecewise-linear knots. User-supplied samples are canonicalized to the
/// piecewise-constant form.
class SpectralFunction {
public:
    /// Steps (m_k, a_k): alpha = a_k on [m_k, m_{k+1}), right-continuous,
    /// alpha(1) = a_last. First breakpoint must be m = 0.
    static SpectralFunction piecewise_constant(std::vector<std::pair<double, double>> steps,
                                               bool normalized = false) {
        if (steps.empty()) throw config_error("spectral function needs at least one step");
        std::sort(steps.begin(), steps.end());
        if (steps.front().first != 0.0)
            throw config_error("piecewise-constant spectral function must start at m = 0");
        SpectralFunction a;
        a.pc_ = true;
        for (auto& [m, v] : steps) {
            if (m < 0.0 || m >= 1.0)
                throw config_error("spectral breakpoints must lie in [0, 1)");
            if (!a.ms_.empty() && m == a.ms_.back()) {
                a.vs_.back() = v;  // later step at the same m wins (right-continuity)
                continue;
            }
            a.ms_.push_back(m);
            a.vs_.push_back(v);
        }
        a.validate_monotone();
        a.normalized_ = normalized;
        return a;
    }

    /// Knots (m, value) interpolated linearly; m spanning [0,1].
    static SpectralFunction piecewise_linear(std::vector<std::pair<double, double>> knots,
                                             bool normalized = false) {
        if (knots.size() < 2) throw config_error("piecewise-linear alpha needs two knots");
        std::sort(knots.begin(), knots.end());
        SpectralFunction a;
        a.pc_ = false;
        for (auto& [m, v] : knots) {
            if (m < 0.0 || m > 1.0) throw config_error("spectral knot m outside [0,1]");
            a.ms_.push_back(m);
            a.vs_.push_back(v);
        }
        if (a.ms_.front() != 0.0 || a.ms_.back() != 1.0)
            throw config_error("piecewise-linear alpha must span m = 0 to m = 1");
        a.validate_monotone();
        a.normalized_ = normalized;
        return a;
    }

    static SpectralFunction constant(double c) { return piecewise_constant({{0.0, c}}); }

    /// Expected Shortfall at level m0: alpha = (1/m0) * 1_{[1-m0, 1]}.
    static SpectralFunction expected_shortfall(double m0) {
        if (!(m0 > 0.0 && m0 <= 1.0))
            throw config_error("expected shortfall level m0 must lie in (0, 1]");
        if (m0 == 1.0) return piecewise_constant({{0.0, 1.0}}, /*normalized=*/true);
        return piecewise_constant({{0.0, 0.0}, {1.0 - m0, 1.0 / m0}}, /*normalized=*/true);
    }

    /// Canonicalize sampled (m, alpha(m)) pairs onto a piecewise-constant grid
    /// of `pieces` equal cells, value = linear interpolation at cell midpoints.
    static SpectralFunction from_samples(std::vector<std::pair<double, double>> samples,
                                         int pieces = 1024, bool normalized = false) {
        if (samples.size() < 2) throw config_error("alpha samples need at least two points");
        if (pieces < 1) throw config_error("canonicalization grid needs at least one piece");
        std::sort(samples.begin(), samples.end());
        auto interp = [&](double m) {
            auto it = std::lower_bound(samples.begin(), samples.end(),
                                       std::make_pair(m, -std::numeric_limits<double>::infinity()));
            if (it == samples.begin()) return samples.front().second;
            if (it == samples.end()) return samples.back().second;
            auto [m1, v1] = *it;
            auto [m0, v0] = *(it - 1);
            if (m1 == m0) return v1;
            return v0 + (m - m0) / (m1 - m0) * (v1 - v0);
        };
        std::vector<std::pair<double, double>> steps;
        steps.reserve(static_cast<std::size_t>(pieces));
        for (int k = 0; k < pieces; ++k)
            steps.emplace_back(static_cast<double>(k) / pieces, interp((k + 0.5) / pieces));
        return piecewise_constant(std::move(steps), normalized);
    }

    double operator()(double m) const {
        if (m < 0.0 || m > 1.0) throw std::invalid_argument("spectral argument outside [0,1]");
        if (pc_) {
            auto it = std::upper_bound(ms_.begin(), ms_.end(), m);
            return vs_[static_cast<std::size_t>(it - ms_.begin()) - 1];
        }
        auto it = std::lower_bound(ms_.begin(), ms_.end(), m);
        std::size_t i = static_cast<std::size_t>(it - ms_.begin());
        if (i >= ms_.size()) return vs_.back();
        if (ms_[i] == m) return vs_[i];
        const double m0 = ms_[i - 1], m1 = ms_[i];
        return vs_[i - 1] + (m - m0) / (m1 - m0) * (vs_[i] - vs_[i - 1]);
    }

    double bound() const { return vs_.back(); }   // alpha(1) = M
    double at_zero() const { return vs_.front(); }

    bool is_piecewise_constant() const { return pc_; }
    bool is_constant() const {
        return std::all_of(vs_.begin(), vs_.end(), [&](double v) { return v == vs_.front(); });
    }
    bool normalized_flag() const { return normalized_; }

    /// Exact int_0^1 alpha(m) dm.
    double integral() const {
        std::vector<double> terms;
        terms.reserve(ms_.size());
        if (pc_) {
            for (std::size_t k = 0; k < ms_.size(); ++k) {
                const double end = (k + 1 < ms_.size()) ? ms_[k + 1] : 1.0;
                terms.push_back(vs_[k] * (end - ms_[k]));
            }
        } else {
            for (std::size_t k = 0; k + 1 < ms_.size(); ++k)
                terms.push_back(0.5 * (vs_[k] + vs_[k + 1]) * (ms_[k + 1] - ms_[k]));
        }
        return pairwise_sum(terms);
    }

    bool is_normalized(double tol = 1e-10) const { return std::abs(integral() - 1.0) <= tol; }

    /// m-values where alpha is discontinuous or kinked.
    std::vector<double> breakpoints() const {
        return {ms_.begin() + (pc_ ? 1 : 0), ms_.end() - (pc_ ? 0 : 1)};
    }

    std::span<const double> knot_levels() const { return ms_; }
    std::span<const double> knot_values() const { return vs_; }

private:
    SpectralFunction() = default;

    void validate_monotone() {
        if (vs_.front() < 0.0) {
            if (vs_.front() < -1e-12)
                throw config_error("spectral function must be nonnegative (alpha(0) >= 0)");
            vs_.front() = 0.0;
        }
        for (std::size_t k = 1; k < vs_.size(); ++k) {
            if (vs_[k] < vs_[k - 1] - 1e-12)
                throw config_error("spectral function must be nondecreasing (violation at m = " +
                                   std::to_string(ms_[k]) + ")");
            vs_[k] = std::max(vs_[k], vs_[k - 1]);
        }
        if (!std::isfinite(vs_.back()))
            throw config_error("spectral function must be bounded (alpha(1) < inf)");
    }

    bool pc_ = true;
    bool normalized_ = false;
    std::vector<double> ms_, vs_;
};

inline SpectralFunction expected_shortfall_alpha(double m0) {
    return SpectralFunction::expected_shortfall(m0);
}

/// The spectral measure mu0 = alpha_# Leb_[0,1] as a discrete marginal,
/// together with the mass of its atom at 0 (= Leb{alpha = 0}).
struct SpectralMeasure {
    Marginal measure;
    double atom_at_zero_mass = 0.0;
};

/// Exact pushforward for piecewise-constant alpha (atoms = distinct values,
/// weights = Lebesgue measure of the level sets); midpoint quantization on
/// quantization_n cells otherwise.
inline SpectralMeasure spectral_measure(const SpectralFunction& alpha, int quantization_n = 1024) {
    std::vector<std::pair<double, double>> atoms;
    if (alpha.is_piecewise_constant()) {
        auto ms = alpha.knot_levels();
        auto vs = alpha.knot_values();
        for (std::size_t k = 0; k < ms.size(); ++k) {
            const double end = (k + 1 < ms.size()) ? ms[k + 1] : 1.0;
            if (end > ms[k]) atoms.emplace_back(vs[k], end - ms[k]);
        }
    } else {
        if (quantization_n < 1) throw config_error("quantization_n must be positive");
        for (int k = 1; k <= quantization_n; ++k)
            atoms.emplace_back(alpha((k - 0.5) / quantization_n), 1.0 / quantization_n);
    }
    SpectralMeasure out{Marginal::discrete(std::move(atoms)), 0.0};
    auto locs = out.measure.atom_locations();
    auto ws = out.measure.atom_weights();
    for (std::size_t k = 0; k < locs.size(); ++k)
        if (locs[k] == 0.0) out.atom_at_zero_mass += ws[k];
    return out;
}

/// R_alpha(mu) = int_0^1 F_mu^{-1}(m) alpha(m) dm. Exact (common-refinement
/// summation) for discrete mu with piecewise-constant alpha; quadrature with
/// splits at all breakpoints otherwise.
inline double spectral_risk(const SpectralFunction& alpha, const Marginal& mu) {
    if (mu.is_discrete() && alpha.is_piecewise_constant()) {
        std::vector<double> cuts = mu.quantile_breakpoints();
        auto ab = alpha.breakpoints();
        cuts.insert(cuts.end(), ab.begin(), ab.end());
        cuts.push_back(1.0);
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> terms;
        terms.reserve(cuts.size());
        double prev = 0.0;
        for (double m : cuts) {
            if (m <= prev) continue;
            const double mid = 0.5 * (prev + m);
            terms.push_back((m - prev) * alpha(mid) * mu.quantile(mid));
            prev = m;
        }
        return pairwise_sum(terms);
    }
    std::vector<double> cuts = mu.quantile_breakpoints();
    auto ab = alpha.breakpoints();
    cuts.insert(cuts.end(), ab.begin(), ab.end());
    return integrate_unit([&](double m) { return alpha(m) * mu.quantile(m); }, cuts);
}

/// The shortfall level m0 when alpha is exactly the Expected-Shortfall
/// spectral function ((1/m0) on the top m0 mass, 0 elsewhere; m0 = 1 is the
/// mean). Empty for every other shape: the partial-transport equivalence
/// only holds for this exact form.
inline std::optional<double> expected_shortfall_level(const SpectralFunction& alpha) {
    if (!alpha.is_piecewise_constant()) return std::nullopt;
    const SpectralMeasure sm = spectral_measure(alpha);
    auto locs = sm.measure.atom_locations();
    auto ws = sm.measure.atom_weights();
    if (locs.size() == 1 && std::abs(locs[0] - 1.0) <= 1e-12) return 1.0;
    if (locs.size() == 2 && locs[0] == 0.0) {
        const double m0 = ws[1];
        if (std::abs(locs[1] * m0 - 1.0) <= 1e-9) return m0;
    }
    return std::nullopt;
}

/// Independent route to the same number: R_alpha(mu) as the optimal transport
/// value max over couplings of (alpha_# Leb, mu) of int x*y dpi, solved by the
/// exact LP oracle. Defined in transport_lp.hpp.
inline double risk_via_ot(const SpectralFunction& alpha, const Marginal& mu);

}  // namespace specrisk
