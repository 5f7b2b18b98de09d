#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specrisk/errors.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/multirisk.hpp"
#include "specrisk/payout.hpp"
#include "specrisk/spectral.hpp"
#include "specrisk/stability.hpp"

namespace specrisk {

using json = nlohmann::ordered_json;

enum class SolverChoice { automatic, comonotone, lp, entropic, partial };

inline const char* to_string(SolverChoice s) {
    switch (s) {
        case SolverChoice::automatic: return "auto";
        case SolverChoice::comonotone: return "comonotone";
        case SolverChoice::lp: return "lp";
        case SolverChoice::entropic: return "entropic";
        case SolverChoice::partial: return "partial";
    }
    return "?";
}

/// Fully resolved run configuration: payout, marginals, spectral function,
/// solver selection and knobs. `echo` keeps the normalized JSON the instance
/// was built from, which reports embed and tests round-trip.
struct RunConfig {
    std::optional<Payout> payout;              // scalar payout
    std::optional<VectorPayout> vector_payout; // multirisk payout
    std::vector<Marginal> marginals;
    std::vector<std::string> marginal_provenance;  // "config" or "placeholder"
    SpectralFunction spectral = SpectralFunction::constant(1.0);
    std::optional<Curve> curve;

    std::optional<std::vector<int>> declared_s_minus;
    SolverChoice solver = SolverChoice::automatic;
    double epsilon = 1e-3;
    std::optional<double> partial_m0;
    int discretize_n = 64;
    int grid_per_axis = 0;  // 0 = auto
    std::uint64_t seed = 1;

    std::optional<json> stability_spec;
    json echo;
};

namespace cfgdetail {

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("config is not valid JSON: " + std::string(e.what()));
    }
    return j;
}

inline std::vector<std::pair<double, double>> load_two_column_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open CSV file: " + path.string());
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a, b;
        if (ls >> a >> b) rows.emplace_back(a, b);
        else if (rows.empty()) continue;  // tolerate one header line
        else throw config_error("malformed CSV row in " + path.string() + ": " + line);
    }
    if (rows.empty()) throw config_error("CSV file has no data rows: " + path.string());
    return rows;
}

inline double require_number(const json& j, const std::string& key, const char* where) {
    if (!j.contains(key) || !j[key].is_number())
        throw config_error(std::string(where) + " needs numeric field '" + key + "'");
    return j[key].get<double>();
}

}  // namespace cfgdetail

inline Marginal make_marginal(const json& spec, const std::filesystem::path& base_dir) {
    using cfgdetail::require_number;
    if (!spec.is_object() || !spec.contains("type"))
        throw config_error("marginal spec needs a 'type' field");
    const std::string type = spec["type"].get<std::string>();
    if (type == "uniform")
        return Marginal::uniform(require_number(spec, "a", "uniform"),
                                 require_number(spec, "b", "uniform"));
    if (type == "triangular")
        return Marginal::triangular(require_number(spec, "a", "triangular"),
                                    require_number(spec, "mode", "triangular"),
                                    require_number(spec, "b", "triangular"));
    if (type == "truncated_normal") {
        const double mean = require_number(spec, "mean", "truncated_normal");
        const double sd = require_number(spec, "sd", "truncated_normal");
        const double lo = spec.contains("lo") ? spec["lo"].get<double>() : mean - 6.0 * sd;
        const double hi = spec.contains("hi") ? spec["hi"].get<double>() : mean + 6.0 * sd;
        return Marginal::truncated_normal(mean, sd, lo, hi);
    }
    if (type == "truncated_gumbel") {
        const double loc = require_number(spec, "loc", "truncated_gumbel");
        const double scale = require_number(spec, "scale", "truncated_gumbel");
        // Default truncation at mean +- 6 sd of the untruncated Gumbel.
        const double mean = loc + 0.57721566490153286 * scale;
        const double sd = M_PI * scale / std::sqrt(6.0);
        const double lo = spec.contains("lo") ? spec["lo"].get<double>() : mean - 6.0 * sd;
        const double hi = spec.contains("hi") ? spec["hi"].get<double>() : mean + 6.0 * sd;
        return Marginal::truncated_gumbel(loc, scale, lo, hi);
    }
    if (type == "discrete") {
        std::vector<std::pair<double, double>> atoms;
        if (spec.contains("csv"))
            atoms = cfgdetail::load_two_column_csv(base_dir / spec["csv"].get<std::string>());
        else if (spec.contains("atoms"))
            for (const auto& row : spec["atoms"])
                atoms.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        else
            throw config_error("discrete marginal needs 'atoms' or 'csv'");
        return Marginal::discrete(std::move(atoms));
    }
    if (type == "piecewise_linear_quantile") {
        std::vector<std::pair<double, double>> knots;
        for (const auto& row : spec.at("knots"))
            knots.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        return Marginal::piecewise_linear_quantile(std::move(knots));
    }
    throw config_error("unknown marginal type '" + type + "'");
}

inline SpectralFunction make_spectral(const json& spec, const std::filesystem::path& base_dir) {
    if (!spec.is_object() || !spec.contains("type"))
        throw config_error("spectral spec needs a 'type' field");
    const std::string type = spec["type"].get<std::string>();
    const bool normalized = spec.value("normalized", false);
    if (type == "expected_shortfall")
        return SpectralFunction::expected_shortfall(
            cfgdetail::require_number(spec, "m0", "expected_shortfall"));
    if (type == "constant")
        return SpectralFunction::constant(cfgdetail::require_number(spec, "value", "constant"));
    if (type == "piecewise_constant") {
        std::vector<std::pair<double, double>> steps;
        for (const auto& row : spec.at("breakpoints"))
            steps.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        return SpectralFunction::piecewise_constant(std::move(steps), normalized);
    }
    if (type == "piecewise_linear") {
        std::vector<std::pair<double, double>> knots;
        for (const auto& row : spec.at("knots"))
            knots.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        return SpectralFunction::piecewise_linear(std::move(knots), normalized);
    }
    if (type == "samples") {
        auto rows = cfgdetail::load_two_column_csv(base_dir / spec.at("file").get<std::string>());
        return SpectralFunction::from_samples(std::move(rows), spec.value("pieces", 1024),
                                              normalized);
    }
    throw config_error("unknown spectral type '" + type + "'");
}

/// Parse and validate a full run configuration. CSV paths inside the config
/// resolve relative to base_dir.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    RunConfig cfg;

    if (!j.contains("marginals") || !j["marginals"].is_array() || j["marginals"].empty())
        throw config_error("config needs a non-empty 'marginals' array");
    for (const auto& mspec : j["marginals"]) {
        cfg.marginals.push_back(make_marginal(mspec, base_dir));
        cfg.marginal_provenance.push_back(mspec.value("provenance", "config"));
    }
    const int d = static_cast<int>(cfg.marginals.size());

    if (!j.contains("payout") || !j["payout"].is_object())
        throw config_error("config needs a 'payout' object");
    const json& pj = j["payout"];

    std::vector<std::string> names;
    if (pj.contains("vars"))
        for (const auto& v : pj["vars"]) names.push_back(v.get<std::string>());
    else
        for (int i = 1; i <= d; ++i) names.push_back("x" + std::to_string(i));
    if (static_cast<int>(names.size()) != d)
        throw config_error("payout.vars must name one variable per marginal");

    std::vector<std::array<double, 2>> box;
    if (pj.contains("domain")) {
        for (const auto& iv : pj["domain"])
            box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        if (static_cast<int>(box.size()) != d)
            throw config_error("payout.domain must list one interval per marginal");
    } else {
        for (const auto& mu : cfg.marginals) box.push_back({mu.lo(), mu.hi()});
    }
    for (int i = 0; i < d; ++i) {
        if (cfg.marginals[static_cast<std::size_t>(i)].lo() < box[static_cast<std::size_t>(i)][0] - 1e-12 ||
            cfg.marginals[static_cast<std::size_t>(i)].hi() > box[static_cast<std::size_t>(i)][1] + 1e-12)
            throw config_error("support of marginal '" + names[static_cast<std::size_t>(i)] +
                               "' leaves the declared domain box");
    }

    const bool has_expr = pj.contains("expr");
    const bool has_components = pj.contains("components");
    if (has_expr == has_components)
        throw config_error("payout needs exactly one of 'expr' or 'components'");
    if (has_expr) {
        cfg.payout = parse_payout(pj["expr"].get<std::string>(), d, box, names);
    } else {
        VectorPayout vb;
        for (const auto& comp : pj["components"])
            vb.components.push_back(parse_payout(comp.get<std::string>(), d, box, names));
        vb.validate();
        cfg.vector_payout = std::move(vb);
    }

    if (pj.contains("s_minus")) {
        std::vector<int> sm;
        for (const auto& v : pj["s_minus"]) {
            if (v.is_number_integer())
                sm.push_back(v.get<int>());
            else {
                const std::string name = v.get<std::string>();
                auto it = std::find(names.begin(), names.end(), name);
                if (it == names.end())
                    throw config_error("s_minus names unknown variable '" + name + "'");
                sm.push_back(static_cast<int>(it - names.begin()) + 1);
            }
        }
        cfg.declared_s_minus = std::move(sm);
    } else if (pj.value("supermodular", false)) {
        cfg.declared_s_minus = std::vector<int>{};
    }

    if (j.contains("spectral")) cfg.spectral = make_spectral(j["spectral"], base_dir);

    if (j.contains("curve")) {
        Curve curve;
        for (const auto& comp : j["curve"]) curve.components.push_back(make_spectral(comp, base_dir));
        cfg.curve = std::move(curve);
    }

    if (j.contains("solver")) {
        const std::string s = j["solver"].get<std::string>();
        if (s == "auto") cfg.solver = SolverChoice::automatic;
        else if (s == "comonotone") cfg.solver = SolverChoice::comonotone;
        else if (s == "lp") cfg.solver = SolverChoice::lp;
        else if (s == "entropic") cfg.solver = SolverChoice::entropic;
        else if (s == "partial") cfg.solver = SolverChoice::partial;
        else throw config_error("unknown solver '" + s + "'");
    }
    cfg.epsilon = j.value("epsilon", 1e-3);
    if (j.contains("m0")) cfg.partial_m0 = j["m0"].get<double>();
    cfg.discretize_n = j.value("discretize", 64);
    if (cfg.discretize_n < 1) throw config_error("discretize must be >= 1");
    cfg.grid_per_axis = j.value("grid_per_axis", 0);
    cfg.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("stability")) cfg.stability_spec = j["stability"];

    cfg.echo = j;
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(cfgdetail::load_json_file(path), path.parent_path());
}

}  // namespace specrisk
