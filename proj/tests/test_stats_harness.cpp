#include <doctest.h>

#include <atomic>
#include <cmath>

#include "kpz/errors.hpp"
#include "kpz/harness.hpp"
#include "kpz/stats.hpp"

using namespace kpz;

TEST_CASE("split-merge running statistics equal the single pass") {
    RngStream rng(1, 0);
    std::vector<double> x(1001);
    rng.fill_normal(x, 2.0);
    RunningStats all, a, b;
    for (std::size_t i = 0; i < x.size(); ++i) {
        all.add(x[i]);
        (i < 377 ? a : b).add(x[i]);
    }
    a.merge(b);
    CHECK(a.n() == all.n());
    CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-13));
    CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
    RunningStats empty;
    empty.merge(all);
    CHECK(empty.mean() == all.mean());
}

TEST_CASE("estimate_mean verdicts") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    auto e = estimate_mean(v, 2.5);
    CHECK(e.estimate == 2.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(e.verdict == Verdict::pass);
    e = estimate_mean(v, 10.0);
    CHECK(e.verdict == Verdict::fail);
    e = estimate_mean(v, 10.0, 7.0);  // allowance absorbs the gap
    CHECK(e.verdict == Verdict::pass);
    CHECK(estimate_mean(v).verdict == Verdict::informational);
}

TEST_CASE("3 stderr bands cover the mean at least 99% of the time") {
    CHECK(harness::coverage_3se(4000, 200, 17) >= 0.99);
}

TEST_CASE("KS against the uniform law") {
    RngStream rng(2, 0);
    std::vector<double> u(2000), sq(2000);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = rng.uniform();
        sq[i] = u[i] * u[i];
    }
    CHECK(ks_uniform(u).p_value > 0.001);
    CHECK(ks_uniform(sq).p_value < 1e-6);
    CHECK(kolmogorov_q(0.0) == doctest::Approx(1.0));
    CHECK(kolmogorov_q(1.36) == doctest::Approx(0.049).epsilon(0.02));
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config hash ignores insertion order") {
    std::map<std::string, std::string> a{{"x", "1"}, {"y", "2"}}, b;
    b["y"] = "2";
    b["x"] = "1";
    CHECK(harness::config_hash(a) == harness::config_hash(b));
    b["x"] = "3";
    CHECK(harness::config_hash(a) != harness::config_hash(b));
}

TEST_CASE("parallel_map results do not depend on the worker count") {
    auto f = [](std::int64_t i) {
        RngStream rng(9, static_cast<std::uint64_t>(i));
        return rng.normal();
    };
    const auto one = harness::parallel_map<double>(200, 1, f);
    const auto four = harness::parallel_map<double>(200, 4, f);
    CHECK(one == four);
}

TEST_CASE("parallel_map rethrows the lowest failing index") {
    try {
        harness::parallel_map<int>(50, 3, [](std::int64_t i) -> int {
            if (i == 7 || i == 30) throw BlowUp("boom", 0.5);
            return 0;
        });
        FAIL("expected BlowUp");
    } catch (const BlowUp& e) {
        CHECK(e.trajectory == 7);
    }
}

TEST_CASE("ensembles below 100 trajectories are refused") {
    spde::SimConfig c;
    CHECK_THROWS_AS(harness::run_ensemble(c, 99, spde::ObservableSpec{}, harness::stationary_law(c), 1), ConfigError);
}

TEST_CASE("ensemble rows are deterministic under worker changes") {
    spde::SimConfig c;
    c.scheme = spde::Scheme::burgers;
    c.nx = 32;
    c.M = 2.0;
    c.eps = 0.25;
    c.t_end = 0.01;
    spde::ObservableSpec obs;
    obs.record_every = 10;
    const auto law = harness::stationary_law(c);
    const auto a = harness::to_table(harness::run_ensemble(c, 100, obs, law, 1));
    const auto b = harness::to_table(harness::run_ensemble(c, 100, obs, law, 3));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].trajectory_id == b[i].trajectory_id);
        CHECK(a[i].value == b[i].value);
    }
}

TEST_CASE("W1 to a normal is small for normal samples") {
    RngStream rng(5, 0);
    std::vector<double> x(20000);
    rng.fill_normal(x, 1.5);
    CHECK(harness::w1_to_normal(x, 2.25) < 0.05);
    CHECK(harness::w1_to_normal(x, 9.0) > 0.5);
}

TEST_CASE("suite names round-trip") {
    for (auto s : harness::all_suites()) CHECK(harness::suite_from_name(harness::suite_name(s)) == s);
    CHECK_THROWS(harness::suite_from_name("nope"));
}
