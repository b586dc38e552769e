#include <doctest.h>

#include <sstream>

#include "cli_support.hpp"
#include "kpz/errors.hpp"

using namespace kpzcli;

TEST_CASE("config text parsing") {
    const auto c = parse_config_text("# comment\nseed = 42\n\n  sim.M=8 # trailing\nkernel.epsilon_list = 0.1, 0.2\n");
    CHECK(c.at("seed") == "42");
    CHECK(c.at("sim.M") == "8");
    CHECK(get_list(c, "kernel.epsilon_list", {}) == std::vector<double>{0.1, 0.2});
    CHECK_THROWS_AS(parse_config_text("seed 42\n"), kpz::ConfigError);
}

TEST_CASE("unknown keys and malformed values are config errors") {
    CHECK_THROWS_AS(check_known_keys({{"sim.bogus", "1"}}), kpz::ConfigError);
    CHECK_NOTHROW(check_known_keys({{"sim.M", "1"}, {"bg.phi_center", "2"}}));
    CHECK_THROWS_AS(get_double({{"sim.M", "four"}}, "sim.M", 1.0), kpz::ConfigError);
    CHECK_THROWS_AS(get_int({{"sim.nx", "12.5"}}, "sim.nx", 1), kpz::ConfigError);
    CHECK_THROWS_AS(get_seed({{"seed", "-1"}}), kpz::ConfigError);
    CHECK(get_seed({}) == 0);
}

TEST_CASE("bg suite refuses overlapping supports") {
    try {
        suite_params(kpz::harness::Suite::bg, {{"bg.phi_center", "0.2"}});
        FAIL("expected ConfigError");
    } catch (const kpz::ConfigError& e) {
        CHECK(std::string(e.what()).find("disjoint") != std::string::npos);
    }
    CHECK_NOTHROW(suite_params(kpz::harness::Suite::bg, {}));
}

TEST_CASE("small ensembles are rejected at configuration time") {
    CHECK_THROWS_AS(suite_params(kpz::harness::Suite::burgers, {{"ensemble.trajectories", "50"}}), kpz::ConfigError);
}

TEST_CASE("simulation config validation surfaces the field") {
    try {
        sim_config({{"sim.dt", "1"}});
        FAIL("expected ConfigError");
    } catch (const kpz::ConfigError& e) {
        CHECK(e.field == "sim.dt");
    }
}

TEST_CASE("CSV output") {
    std::ostringstream empty;
    write_csv(empty, {});
    CHECK(empty.str() == "trajectory_id,t,observable,value\n");
    std::ostringstream os;
    write_csv(os, {{3, 0.1, "u2", 1.0 / 3.0}});
    CHECK(os.str() == "trajectory_id,t,observable,value\n3,0.10000000000000001,u2,0.33333333333333331\n");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("reports serialize without timings") {
    kpz::harness::SuiteReport r;
    r.suite = "x";
    r.seconds = 12.0;
    r.checks.push_back({"c", kpz::estimate_mean(std::vector<double>{1.0, 1.0}, 1.0), "rule"});
    const auto j = to_json(r);
    CHECK(j["verdict"] == "pass");
    CHECK(j.dump().find("seconds") == std::string::npos);
    CHECK(hex(255) == "00000000000000ff");
}
