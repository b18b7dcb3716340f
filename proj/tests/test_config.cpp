#include "bundlemart/config.hpp"

#include <doctest.h>

#include <algorithm>

using namespace bundlemart;

namespace {

bool mentions(const std::vector<Diagnostic>& d, const std::string& text) {
    return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.message.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("TOML subset") {
    const auto j = parse_toml(R"(# comment
experiment = "sasaki"   # trailing
model = 'tm-s2-sasaki'
dt = 1e-3
n_paths = 1_000
seed = 42
x0 = [0.5, -0.25]
family = [
  -1, -0.5,   # multi-line
  0, 0.5, 1,
]
flag = true
)");
    CHECK(j["experiment"] == "sasaki");
    CHECK(j["model"] == "tm-s2-sasaki");
    CHECK(j["dt"].get<double>() == 1e-3);
    CHECK(j["n_paths"].get<int>() == 1000);
    CHECK(j["x0"].size() == 2);
    CHECK(j["family"].size() == 5);
    CHECK(j["flag"] == true);

    CHECK_THROWS_AS(parse_toml("dt = "), ConfigError);
    CHECK_THROWS_AS(parse_toml("[table]\nx = 1"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = 1\nx = 2"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = [1, 2"), ConfigError);
    CHECK_THROWS_AS(parse_toml("s = \"open"), ConfigError);
    try {
        parse_toml("a = 1\nb = 1.2.3");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("config fields and defaults") {
    const ParsedConfig p = parse_config("experiment = \"coupling\"\nseed = 7\nmerge_radius = 0.05\nthreads = 1\n");
    CHECK(p.diagnostics.empty());
    CHECK(p.config.experiment == "coupling");
    CHECK(p.config.seed == 7);
    REQUIRE(p.config.merge_radius.has_value());
    CHECK(*p.config.merge_radius == 0.05);
    CHECK(p.config.resolved_model() == "sphere2");
    CHECK(validate(p.config).empty());

    const ParsedConfig defaults = parse_config("");
    CHECK(defaults.diagnostics.empty());
    CHECK(defaults.config.resolved_model() == "flat-r2");
    CHECK(validate(defaults.config).empty());
}

TEST_CASE("validation messages") {
    ExperimentConfig c;
    c.dt = 0.0;
    CHECK(mentions(validate(c), "dt must be positive"));

    c = ExperimentConfig{};
    c.model = "klein-bottle";
    const auto d = validate(c);
    CHECK(mentions(d, "unknown model 'klein-bottle'"));
    CHECK(mentions(d, "sphere2"));
    CHECK(mentions(d, "hopf-c2"));

    c = ExperimentConfig{};
    c.experiment = "sasaki";
    c.model = "torus2";
    CHECK(mentions(validate(c), "does not run on model"));

    c = ExperimentConfig{};
    c.experiment = "nope";
    CHECK(mentions(validate(c), "unknown experiment"));

    c = ExperimentConfig{};
    c.n_paths = 0;
    c.method = "mirror";
    c.x0 = {1.0};
    const auto many = validate(c);
    CHECK(mentions(many, "n_paths must be positive"));
    CHECK(mentions(many, "method must be one of"));
    CHECK(mentions(many, "x0 must have 2 coordinates"));
}

TEST_CASE("unknown keys and wrong types are rejected") {
    const ParsedConfig p = parse_config("experiment = \"bm-check\"\nstep = 0.1\ndt = \"small\"\nseed = -3\nx0 = [1, \"a\"]\n");
    CHECK(mentions(p.diagnostics, "unknown key 'step'"));
    CHECK(mentions(p.diagnostics, "dt must be a number"));
    CHECK(mentions(p.diagnostics, "seed must be a non-negative integer"));
    CHECK(mentions(p.diagnostics, "x0 must be an array of numbers"));
    CHECK(mentions(parse_config("[run]\n").diagnostics, "tables are not supported"));
}

TEST_CASE("config echo round-trips") {
    ExperimentConfig c;
    c.experiment = "hopf";
    c.family = {0.0, 0.5};
    c.merge_radius = 0.1;
    const auto j = c.to_json();
    CHECK(j["model"] == "hopf-c1");
    nlohmann::json back = j;
    back.erase("merge_radius");
    back["merge_radius"] = 0.1;
    const ParsedConfig p = config_from_json(back);
    CHECK(p.diagnostics.empty());
    CHECK(p.config.to_json() == j);
}
