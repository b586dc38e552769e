// Acceptance runner: one line per criterion, with its runtime budget.
// Exit status is 0 once every criterion has been evaluated; --strict turns
// any FAIL line into a nonzero exit.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kpz/checks.hpp"
#include "kpz/errors.hpp"
#include "kpz/harness.hpp"

using namespace kpz;
using harness::SuiteReport;
using nlohmann::json;

namespace {

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<std::vector<SuiteReport>()> run;
};

std::string first_failure(const std::vector<SuiteReport>& rs) {
    for (const auto& r : rs)
        for (const auto& c : r.checks)
            if (c.est.verdict == Verdict::fail) {
                char buf[320];
                std::snprintf(buf, sizeof buf, "%s / %s: %.6g vs %.6g (se %.2g)", r.suite.c_str(), c.name.c_str(),
                              c.est.estimate, c.est.target.value_or(0.0), c.est.std_error);
                return buf;
            }
    for (const auto& r : rs)
        for (const auto& s : r.stationarity)
            for (const auto& o : s.observables)
                if (o.verdict == Verdict::fail) return r.suite + " / drift of " + o.name;
    return "";
}

int count(const std::vector<SuiteReport>& rs, Verdict v) {
    int n = 0;
    for (const auto& r : rs) {
        for (const auto& c : r.checks) n += c.est.verdict == v;
        for (const auto& s : r.stationarity)
            for (const auto& o : s.observables) n += o.verdict == v;
    }
    return n;
}

json report_json(const SuiteReport& r) {
    json j;
    j["suite"] = r.suite;
    j["verdict"] = verdict_name(r.verdict());
    j["seconds"] = r.seconds;
    j["checks"] = json::array();
    for (const auto& c : r.checks)
        j["checks"].push_back({{"name", c.name},
                               {"estimate", c.est.estimate},
                               {"stderr", c.est.std_error},
                               {"target", c.est.target ? json(*c.est.target) : json(nullptr)},
                               {"allowance", c.est.allowance},
                               {"n", c.est.n},
                               {"rule", c.rule},
                               {"verdict", verdict_name(c.est.verdict)}});
    j["drift"] = json::array();
    for (const auto& s : r.stationarity)
        for (const auto& o : s.observables)
            j["drift"].push_back({{"name", o.name},
                                  {"t0", o.at_0.estimate},
                                  {"tT", o.at_T.estimate},
                                  {"combined_stderr", o.combined_stderr},
                                  {"verdict", verdict_name(o.verdict)}});
    j["notes"] = r.notes;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::set<int> only;
    std::string json_path;
    std::uint64_t seed = 20240601;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--strict")) {
            strict = true;
        } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        } else if (!std::strcmp(argv[i], "--json") && i + 1 < argc) {
            json_path = argv[++i];
        } else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) {
            seed = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "usage: %s [--strict] [--only N]... [--json path] [--seed S]\n", argv[0]);
            return 2;
        }
    }
    const int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    auto suite = [&](harness::Suite s) {
        auto p = harness::suite_defaults(s);
        p.seed = seed;
        p.workers = workers;
        return harness::run_suite(s, p);
    };
    auto chaos = [&](checks::ChaosCheck k) {
        auto p = checks::chaos_defaults(k);
        p.seed = seed;
        return checks::run_chaos_check(k, p);
    };
    using checks::ChaosCheck;
    using harness::Suite;

    const std::vector<Criterion> crits = {
        {1, "exact lattice identities", 5.0, [&] { return std::vector{checks::lattice_identities({8, 64, 256}, 1000, seed)}; }},
        {2, "energy gradient formula", 5.0, [&] { return std::vector{checks::gradient_check(16, 100, seed)}; }},
        {3, "constant 1/12", 30.0, [&] { return std::vector{chaos(ChaosCheck::j1)}; }},
        {4, "second-moment closed forms", 60.0,
         [&] { return std::vector{chaos(ChaosCheck::remark31_1), chaos(ChaosCheck::remark31_2)}; }},
        {5, "diagram formula", 120.0, [&] { return std::vector{chaos(ChaosCheck::diagram)}; }},
        {6, "exponential chaos", 30.0, [&] { return std::vector{chaos(ChaosCheck::exp_chaos)}; }},
        {7, "static Boltzmann-Gibbs null", 120.0, [&] { return std::vector{chaos(ChaosCheck::b_static)}; }},
        {8, "lattice stationarity", 600.0, [&] { return std::vector{suite(Suite::lattice)}; }},
        {9, "Burgers tilt stationarity", 600.0, [&] { return std::vector{suite(Suite::burgers)}; }},
        {10, "Boltzmann-Gibbs principle", 1800.0, [&] { return std::vector{suite(Suite::bg)}; }},
        {11, "limit-SHE tilt law", 1800.0,
         [&] { return std::vector{suite(Suite::she_tilt), suite(Suite::geometric_bm)}; }},
        {12, "wrapped uniformity", 600.0, [&] { return std::vector{suite(Suite::wrapped_uniform)}; }},
    };

    json all = json::array();
    int fails = 0, done = 0;
    for (const auto& c : crits) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<SuiteReport> rs;
        std::string why;
        try {
            rs = c.run();
        } catch (const std::exception& e) {
            why = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const int npass = count(rs, Verdict::pass), nfail = count(rs, Verdict::fail);
        if (why.empty() && nfail > 0) why = first_failure(rs);
        if (why.empty() && npass == 0) why = "no pass/fail check was evaluated";
        if (why.empty() && secs > c.budget_s) why = "over runtime budget";
        const bool ok = why.empty();
        fails += !ok;
        ++done;
        std::printf("criterion %2d  %s  %-30s %3d passed %2d failed  %8.1f s (budget %g s)%s%s\n", c.id,
                    ok ? "PASS" : "FAIL", c.title, npass, nfail, secs, c.budget_s, ok ? "" : "  ", why.c_str());
        std::fflush(stdout);
        json j{{"criterion", c.id}, {"title", c.title}, {"verdict", ok ? "pass" : "fail"}, {"seconds", secs},
               {"budget_seconds", c.budget_s}, {"reason", why}};
        j["reports"] = json::array();
        for (const auto& r : rs) j["reports"].push_back(report_json(r));
        all.push_back(j);
    }
    std::printf("acceptance: %d/%d criteria passed\n", done - fails, done);
    if (!json_path.empty()) {
        std::ofstream f(json_path);
        f << all.dump(2) << '\n';
    }
    return strict && fails > 0 ? 1 : 0;
}
