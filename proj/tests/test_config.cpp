#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "specrisk/config.hpp"

using namespace specrisk;

namespace {

json minimal_config() {
    return json::parse(R"({
      "payout": {"expr": "x1 + x2"},
      "marginals": [
        {"type": "uniform", "a": 0, "b": 1},
        {"type": "discrete", "atoms": [[0.0, 0.5], [1.0, 0.5]]}
      ],
      "spectral": {"type": "expected_shortfall", "m0": 0.25},
      "solver": "auto",
      "seed": 42
    })");
}

}  // namespace

TEST_CASE("minimal config parses with derived defaults", "[config]") {
    auto cfg = parse_config(minimal_config());
    REQUIRE(cfg.payout.has_value());
    CHECK(cfg.payout->arity() == 2);
    CHECK(cfg.payout->var_names() == std::vector<std::string>{"x1", "x2"});
    CHECK(cfg.payout->domain()[0][0] == 0.0);
    CHECK(cfg.payout->domain()[1][1] == 1.0);
    CHECK(cfg.marginals.size() == 2);
    CHECK(cfg.spectral.bound() == 4.0);
    CHECK(cfg.solver == SolverChoice::automatic);
    CHECK(cfg.seed == 42);
}

TEST_CASE("named variables and declared partitions", "[config]") {
    json j = json::parse(R"({
      "payout": {"expr": "a - c", "vars": ["a", "c"], "s_minus": ["c"]},
      "marginals": [
        {"type": "uniform", "a": 0, "b": 1},
        {"type": "uniform", "a": 0, "b": 2}
      ]
    })");
    auto cfg = parse_config(j);
    REQUIRE(cfg.declared_s_minus.has_value());
    CHECK(*cfg.declared_s_minus == std::vector<int>{2});
    CHECK((*cfg.payout)(std::vector<double>{1.0, 0.25}) == 0.75);
}

TEST_CASE("supermodular shorthand declares an empty minus set", "[config]") {
    json j = minimal_config();
    j["payout"]["supermodular"] = true;
    auto cfg = parse_config(j);
    REQUIRE(cfg.declared_s_minus.has_value());
    CHECK(cfg.declared_s_minus->empty());
}

TEST_CASE("config validation failures", "[config]") {
    auto broken = minimal_config();
    broken.erase("marginals");
    CHECK_THROWS_AS(parse_config(broken), config_error);

    broken = minimal_config();
    broken["solver"] = "magic";
    CHECK_THROWS_AS(parse_config(broken), config_error);

    broken = minimal_config();
    broken["payout"]["vars"] = {"x1"};
    CHECK_THROWS_AS(parse_config(broken), config_error);

    broken = minimal_config();
    broken["payout"].erase("expr");
    CHECK_THROWS_AS(parse_config(broken), config_error);

    broken = minimal_config();
    broken["payout"]["domain"] = {{0.0, 0.5}, {0.0, 1.0}};  // uniform support leaves the box
    CHECK_THROWS_AS(parse_config(broken), config_error);

    broken = minimal_config();
    broken["payout"]["s_minus"] = {"nope"};
    CHECK_THROWS_AS(parse_config(broken), config_error);
}

TEST_CASE("vector payout configs", "[config]") {
    json j = json::parse(R"({
      "payout": {"components": ["x1", "x1*x2"]},
      "marginals": [
        {"type": "uniform", "a": 0, "b": 1},
        {"type": "uniform", "a": 0, "b": 1}
      ],
      "curve": [
        {"type": "constant", "value": 1},
        {"type": "expected_shortfall", "m0": 0.5}
      ]
    })");
    auto cfg = parse_config(j);
    CHECK_FALSE(cfg.payout.has_value());
    REQUIRE(cfg.vector_payout.has_value());
    CHECK(cfg.vector_payout->output_dim() == 2);
    REQUIRE(cfg.curve.has_value());
    CHECK(cfg.curve->dim() == 2);
}

TEST_CASE("marginal spec coverage", "[config]") {
    json j = json::parse(R"({
      "payout": {"expr": "x1 + x2 + x3 + x4"},
      "marginals": [
        {"type": "triangular", "a": 0, "mode": 0.5, "b": 1},
        {"type": "truncated_normal", "mean": 0.5, "sd": 0.1},
        {"type": "truncated_gumbel", "loc": 0.3, "scale": 0.05},
        {"type": "piecewise_linear_quantile", "knots": [[0, 0], [1, 1]]}
      ]
    })");
    auto cfg = parse_config(j);
    CHECK(cfg.marginals[1].lo() == Catch::Approx(0.5 - 0.6));  // default mean - 6 sd
    CHECK(cfg.marginals[2].hi() > cfg.marginals[2].lo());
    CHECK(cfg.marginals[3].quantile(0.5) == Catch::Approx(0.5));
}

TEST_CASE("discrete marginals load from CSV", "[config]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "specrisk_cfg_test";
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "atoms.csv");
        csv << "location,weight\n0.0,0.25\n1.0,0.25\n2.0,0.5\n";
    }
    json j = json::parse(R"({
      "payout": {"expr": "x1"},
      "marginals": [{"type": "discrete", "csv": "atoms.csv"}]
    })");
    auto cfg = parse_config(j, dir);
    REQUIRE(cfg.marginals[0].atom_count() == 3);
    CHECK(cfg.marginals[0].atom_weights()[2] == Catch::Approx(0.5));
    fs::remove_all(dir);
}

TEST_CASE("sampled spectral functions load from CSV", "[config]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "specrisk_alpha_csv";
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "alpha.csv");
        csv << "m,alpha\n0.0,0.0\n1.0,2.0\n";
    }
    json j = json::parse(R"({
      "payout": {"expr": "x1"},
      "marginals": [{"type": "uniform", "a": 0, "b": 1}],
      "spectral": {"type": "samples", "file": "alpha.csv", "pieces": 4}
    })");
    auto cfg = parse_config(j, dir);
    CHECK(cfg.spectral.is_piecewise_constant());
    CHECK(cfg.spectral(0.1) == Catch::Approx(0.25));
    fs::remove_all(dir);
}

TEST_CASE("echoed configs re-parse to an equivalent instance", "[config]") {
    auto cfg = parse_config(minimal_config());
    auto again = parse_config(cfg.echo);
    CHECK(again.marginals.size() == cfg.marginals.size());
    CHECK(again.seed == cfg.seed);
    CHECK(again.solver == cfg.solver);
    const std::vector<double> x = {0.3, 0.8};
    CHECK((*again.payout)(x) == (*cfg.payout)(x));
    CHECK(again.echo.dump() == cfg.echo.dump());
}
