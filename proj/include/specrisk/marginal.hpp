#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specrisk/errors.hpp"
#include "specrisk/numerics.hpp"

namespace specrisk {

/// A one-dimensional probability measure with bounded support, exposed through
/// its CDF and generalized-inverse quantile F^{-1}(m) = inf{x : F(x) >= m}.
///
/// Representations: discrete atoms, a piecewise-linear quantile function, or a
/// truncated parametric family (uniform, truncated normal, triangular,
/// truncated Gumbel). Values are immutable after construction and safe to
/// share across threads.
class Marginal {
public:
    enum class Kind { discrete, pl_quantile, uniform, trunc_normal, triangular, trunc_gumbel };

    /// Atoms given as (location, weight); equal locations are merged with
    /// weights summed. Weights must be positive and sum to 1 within 1e-12.
    static Marginal discrete(std::vector<std::pair<double, double>> atoms) {
        if (atoms.empty()) throw config_error("discrete marginal needs at least one atom");
        std::sort(atoms.begin(), atoms.end());
        Marginal mu;
        mu.kind_ = Kind::discrete;
        for (const auto& [x, w] : atoms) {
            if (!std::isfinite(x)) throw config_error("discrete atom location must be finite");
            if (!(w > 0.0)) throw config_error("discrete atom weights must be strictly positive");
            if (!mu.xs_.empty() && x == mu.xs_.back())
                mu.ws_.back() += w;
            else {
                mu.xs_.push_back(x);
                mu.ws_.push_back(w);
            }
        }
        double total = pairwise_sum(mu.ws_);
        if (std::abs(total - 1.0) > 1e-12)
            throw config_error("discrete weights sum to " + std::to_string(total) +
                               ", expected 1 within 1e-12");
        mu.cum_.resize(mu.ws_.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < mu.ws_.size(); ++k) {
            acc += mu.ws_[k];
            mu.cum_[k] = acc;
        }
        mu.cum_.back() = 1.0;
        mu.lo_ = mu.xs_.front();
        mu.hi_ = mu.xs_.back();
        return mu;
    }

    /// Knots (m, x) of the quantile function, m covering [0,1]; x nondecreasing.
    /// Repeated m values encode quantile jumps (atoms of the measure); flat x
    /// stretches encode gaps in the support.
    static Marginal piecewise_linear_quantile(std::vector<std::pair<double, double>> knots) {
        if (knots.size() < 2) throw config_error("quantile needs at least two knots");
        std::sort(knots.begin(), knots.end());
        Marginal mu;
        mu.kind_ = Kind::pl_quantile;
        for (const auto& [m, x] : knots) {
            if (m < 0.0 || m > 1.0) throw config_error("quantile knot m outside [0,1]");
            mu.ms_.push_back(m);
            mu.xs_.push_back(x);
        }
        if (mu.ms_.front() != 0.0 || mu.ms_.back() != 1.0)
            throw config_error("quantile knots must span m = 0 to m = 1");
        for (std::size_t k = 1; k < mu.xs_.size(); ++k) {
            if (mu.xs_[k] < mu.xs_[k - 1] - 1e-12)
                throw config_error("quantile knots must be nondecreasing in x");
            mu.xs_[k] = std::max(mu.xs_[k], mu.xs_[k - 1]);
        }
        mu.lo_ = mu.xs_.front();
        mu.hi_ = mu.xs_.back();
        return mu;
    }

    static Marginal uniform(double a, double b) {
        if (!(a < b)) throw config_error("uniform(a,b) requires a < b");
        Marginal mu;
        mu.kind_ = Kind::uniform;
        mu.p_ = {a, b};
        mu.lo_ = a;
        mu.hi_ = b;
        return mu;
    }

    static Marginal truncated_normal(double mean, double sd, double lo, double hi) {
        if (!(sd > 0.0)) throw config_error("truncated normal requires sd > 0");
        if (!(lo < hi)) throw config_error("truncated normal requires lo < hi");
        Marginal mu;
        mu.kind_ = Kind::trunc_normal;
        mu.p_ = {mean, sd, lo, hi};
        mu.lo_ = lo;
        mu.hi_ = hi;
        const double flo = norm_cdf((lo - mean) / sd), fhi = norm_cdf((hi - mean) / sd);
        if (!(fhi - flo > 0.0))
            throw config_error("truncated normal has no mass on [lo, hi]");
        return mu;
    }

    static Marginal triangular(double a, double mode, double b) {
        if (!(a <= mode && mode <= b && a < b))
            throw config_error("triangular requires a <= mode <= b, a < b");
        Marginal mu;
        mu.kind_ = Kind::triangular;
        mu.p_ = {a, mode, b};
        mu.lo_ = a;
        mu.hi_ = b;
        return mu;
    }

    /// Gumbel (max) distribution with location/scale, truncated to [lo, hi].
    static Marginal truncated_gumbel(double loc, double scale, double lo, double hi) {
        if (!(scale > 0.0)) throw config_error("truncated Gumbel requires scale > 0");
        if (!(lo < hi)) throw config_error("truncated Gumbel requires lo < hi");
        Marginal mu;
        mu.kind_ = Kind::trunc_gumbel;
        mu.p_ = {loc, scale, lo, hi};
        mu.lo_ = lo;
        mu.hi_ = hi;
        return mu;
    }

    Kind kind() const { return kind_; }
    bool is_discrete() const { return kind_ == Kind::discrete; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    std::size_t atom_count() const { return kind_ == Kind::discrete ? xs_.size() : 0; }
    std::span<const double> atom_locations() const { return xs_; }
    std::span<const double> atom_weights() const { return ws_; }

    /// F(x) = mu((-inf, x]); right-continuous and nondecreasing.
    double cdf(double x) const {
        switch (kind_) {
            case Kind::discrete: {
                auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
                if (it == xs_.begin()) return 0.0;
                return cum_[static_cast<std::size_t>(it - xs_.begin()) - 1];
            }
            case Kind::pl_quantile: {
                // sup{m : Q(m) <= x}
                if (x < xs_.front()) return 0.0;
                if (x >= xs_.back()) return 1.0;
                auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
                std::size_t i = static_cast<std::size_t>(it - xs_.begin());
                // xs_[i-1] <= x < xs_[i]; interpolate within the rising piece.
                const double x0 = xs_[i - 1], x1 = xs_[i];
                const double m0 = ms_[i - 1], m1 = ms_[i];
                if (x1 == x0) return m1;
                return m0 + (x - x0) / (x1 - x0) * (m1 - m0);
            }
            case Kind::uniform: {
                const double a = p_[0], b = p_[1];
                return std::clamp((x - a) / (b - a), 0.0, 1.0);
            }
            case Kind::trunc_normal: {
                const double mean = p_[0], sd = p_[1], lo = p_[2], hi = p_[3];
                if (x < lo) return 0.0;
                if (x >= hi) return 1.0;
                const double flo = norm_cdf((lo - mean) / sd), fhi = norm_cdf((hi - mean) / sd);
                return std::clamp((norm_cdf((x - mean) / sd) - flo) / (fhi - flo), 0.0, 1.0);
            }
            case Kind::triangular: {
                const double a = p_[0], c = p_[1], b = p_[2];
                if (x <= a) return 0.0;
                if (x >= b) return 1.0;
                if (x <= c) {
                    if (c == a) return 0.0;  // unreachable for x > a; keeps division safe
                    return (x - a) * (x - a) / ((b - a) * (c - a));
                }
                if (b == c) return 1.0;
                return 1.0 - (b - x) * (b - x) / ((b - a) * (b - c));
            }
            case Kind::trunc_gumbel: {
                const double loc = p_[0], sc = p_[1], lo = p_[2], hi = p_[3];
                if (x < lo) return 0.0;
                if (x >= hi) return 1.0;
                auto g = [&](double t) { return std::exp(-std::exp(-(t - loc) / sc)); };
                return std::clamp((g(x) - g(lo)) / (g(hi) - g(lo)), 0.0, 1.0);
            }
        }
        return 0.0;
    }

    /// Generalized inverse F^{-1}(m) = inf{x : F(x) >= m}. At m = 0 returns
    /// the left endpoint of the support.
    double quantile(double m) const {
        if (m < 0.0 || m > 1.0) throw std::invalid_argument("quantile level outside [0,1]");
        switch (kind_) {
            case Kind::discrete: {
                auto it = std::lower_bound(cum_.begin(), cum_.end(), m);
                if (it == cum_.end()) return xs_.back();
                return xs_[static_cast<std::size_t>(it - cum_.begin())];
            }
            case Kind::pl_quantile: {
                auto it = std::lower_bound(ms_.begin(), ms_.end(), m);
                std::size_t i = static_cast<std::size_t>(it - ms_.begin());
                if (i >= ms_.size()) return xs_.back();
                if (ms_[i] == m) return xs_[i];
                // ms_[i-1] < m < ms_[i]
                const double m0 = ms_[i - 1], m1 = ms_[i];
                return xs_[i - 1] + (m - m0) / (m1 - m0) * (xs_[i] - xs_[i - 1]);
            }
            default: {
                if (m <= 0.0) return lo_;
                if (m >= 1.0) return hi_;
                return bisect_quantile([this](double x) { return cdf(x); }, m, lo_, hi_);
            }
        }
    }

    /// m-levels where the quantile function jumps or has a kink; quadratures
    /// split their segments here.
    std::vector<double> quantile_breakpoints() const {
        switch (kind_) {
            case Kind::discrete:
                return {cum_.begin(), cum_.end() - 1};
            case Kind::pl_quantile: {
                std::vector<double> bp(ms_.begin() + 1, ms_.end() - 1);
                return bp;
            }
            case Kind::triangular:
                return {cdf(p_[1])};
            default:
                return {};
        }
    }

    /// n atoms at the quantiles of the midpoint levels (k - 1/2)/n, weight 1/n.
    Marginal discretized(int n) const {
        if (n < 1) throw config_error("discretize requires n >= 1");
        std::vector<std::pair<double, double>> atoms;
        atoms.reserve(static_cast<std::size_t>(n));
        for (int k = 1; k <= n; ++k)
            atoms.emplace_back(quantile((k - 0.5) / n), 1.0 / n);
        return discrete(std::move(atoms));
    }

    /// The pushforward under x -> x + delta.
    Marginal shifted(double delta) const {
        Marginal mu = *this;
        mu.lo_ += delta;
        mu.hi_ += delta;
        switch (kind_) {
            case Kind::discrete:
            case Kind::pl_quantile:
                for (double& x : mu.xs_) x += delta;
                break;
            case Kind::uniform:
                mu.p_[0] += delta;
                mu.p_[1] += delta;
                break;
            case Kind::trunc_normal:
                mu.p_[0] += delta;
                mu.p_[2] += delta;
                mu.p_[3] += delta;
                break;
            case Kind::triangular:
                mu.p_[0] += delta;
                mu.p_[1] += delta;
                mu.p_[2] += delta;
                break;
            case Kind::trunc_gumbel:
                mu.p_[0] += delta;
                mu.p_[2] += delta;
                mu.p_[3] += delta;
                break;
        }
        return mu;
    }

    double mean() const {
        if (kind_ == Kind::discrete) {
            std::vector<double> terms(xs_.size());
            for (std::size_t k = 0; k < xs_.size(); ++k) terms[k] = xs_[k] * ws_[k];
            return pairwise_sum(terms);
        }
        return integrate_unit([this](double m) { return quantile(m); }, quantile_breakpoints());
    }

private:
    Marginal() = default;

    Kind kind_ = Kind::uniform;
    std::vector<double> xs_, ws_, cum_;  // discrete atoms (xs_, ws_, cum_) or PLQ x-knots (xs_)
    std::vector<double> ms_;             // PLQ m-knots
    std::array<double, 4> p_{};          // parametric parameters, meaning per kind
    double lo_ = 0.0, hi_ = 1.0;
};

/// W_p(mu, nu) = || F_mu^{-1} - F_nu^{-1} ||_{L^p([0,1])}. Exact via the common
/// refinement of the cumulative-weight grids when both marginals are discrete;
/// quadrature with segment splits at all quantile breakpoints otherwise.
inline double wasserstein_1d(const Marginal& mu, const Marginal& nu, double p) {
    if (p < 1.0) throw config_error("wasserstein_1d requires p >= 1");
    if (mu.is_discrete() && nu.is_discrete()) {
        std::vector<std::pair<double, double>> segs;  // (length, |gap|)
        double prev = 0.0, peak = 0.0;
        auto cmu = mu.quantile_breakpoints();
        auto cnu = nu.quantile_breakpoints();
        std::vector<double> cuts;
        cuts.insert(cuts.end(), cmu.begin(), cmu.end());
        cuts.insert(cuts.end(), cnu.begin(), cnu.end());
        cuts.push_back(1.0);
        std::sort(cuts.begin(), cuts.end());
        for (double m : cuts) {
            if (m <= prev) continue;
            const double mid = 0.5 * (prev + m);
            const double gap = std::abs(mu.quantile(mid) - nu.quantile(mid));
            segs.emplace_back(m - prev, gap);
            peak = std::max(peak, gap);
            prev = m;
        }
        if (peak == 0.0) return 0.0;
        std::vector<double> terms(segs.size());
        for (std::size_t k = 0; k < segs.size(); ++k)
            terms[k] = segs[k].first * std::pow(segs[k].second / peak, p);
        const double w = peak * std::pow(pairwise_sum(terms), 1.0 / p);
        if (!std::isfinite(w)) throw numerical_error("wasserstein_1d produced a non-finite value");
        return w;
    }
    std::vector<double> bps = mu.quantile_breakpoints();
    auto bnu = nu.quantile_breakpoints();
    bps.insert(bps.end(), bnu.begin(), bnu.end());
    double peak = 0.0;
    for (int k = 0; k <= 256; ++k)
        peak = std::max(peak, std::abs(mu.quantile(k / 256.0) - nu.quantile(k / 256.0)));
    if (peak == 0.0) peak = 1.0;
    const double integral = integrate_unit(
        [&](double m) { return std::pow(std::abs(mu.quantile(m) - nu.quantile(m)) / peak, p); },
        bps);
    const double w = peak * std::pow(std::max(integral, 0.0), 1.0 / p);
    if (!std::isfinite(w)) throw numerical_error("wasserstein_1d produced a non-finite value");
    return w;
}

}  // namespace specrisk
