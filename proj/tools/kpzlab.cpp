#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "kpz/errors.hpp"
#include "kpz/gaussian_fields.hpp"
#include "kpz/lattice.hpp"

using namespace kpzcli;
namespace fs = std::filesystem;
using kpz::ConfigError;

namespace {

enum Exit { ok = 0, failed = 1, config_error = 2, blow_up = 3 };

struct Run {
    Config cfg;
    Manifest manifest;
    fs::path out;
    std::string format = "csv";
    std::string out_file;  // sample only: explicit file name
    int workers = 1;

    void emit(const std::string& name, const std::string& text) {
        write_file(out, name, text);
        manifest.outputs.push_back(name);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string rows_text(const std::vector<kpz::harness::RawRow>& rows, const std::string& format) {
    std::ostringstream os;
    if (format == "csv") {
        write_csv(os, rows);
    } else {
        json a = json::array();
        for (const auto& r : rows)
            a.push_back({{"trajectory_id", r.trajectory_id}, {"t", r.t}, {"observable", r.observable}, {"value", r.value}});
        os << a.dump(1) << '\n';
    }
    return os.str();
}

int cmd_sample(Run& r) {
    using namespace kpz;
    const std::string law = get_string(r.cfg, "sample.law", "pinned-bm");
    const std::int64_t count = get_int(r.cfg, "sample.count", 1);
    if (count < 1) throw ConfigError("sample.count", "must be at least 1");
    const double M = get_double(r.cfg, "sim.M", 4.0);
    const int nx = static_cast<int>(get_int(r.cfg, "sim.nx", 256));
    const double eps = get_double(r.cfg, "kernel.epsilon", 0.1);
    const int N = static_cast<int>(get_int(r.cfg, "lattice.N", 64));
    if (M <= 0) throw ConfigError("sim.M", "must be positive");
    if (nx < 2 || nx % 2) throw ConfigError("sim.nx", "must be an even integer >= 2");
    if (eps <= 0) throw ConfigError("kernel.epsilon", "must be positive");
    Profile prof;
    try {
        prof = profile_from_name(get_string(r.cfg, "kernel.name", "epanechnikov"));
    } catch (const std::exception& e) {
        throw ConfigError("kernel.name", e.what());
    }
    const std::uint64_t seed = get_seed(r.cfg);
    const PeriodicGrid g(M, nx);

    auto one = [&](std::int64_t id) -> FieldSample {
        RngStream rng(seed, static_cast<std::uint64_t>(id));
        if (law == "pinned-bm") return sample_pinned_bm(M, nx, rng);
        if (law == "two-sided-bm") return sample_two_sided_bm(M / 2, nx / 2, rng);
        if (law == "geometric-bm") return sample_geometric_bm(get_double(r.cfg, "shear.c", 1.0), 0.0, M / 2, nx / 2, rng);
        if (law == "gibbs-nu-N" || law == "nu-N") {
            const auto co = lattice::continuum_coeffs(N, prof, eps);
            FieldSample s;
            s.values = sample_gibbs_nu_N(co.alpha, co.lambda(), N, rng);
            for (int i = 0; i < N; ++i) s.x.push_back(static_cast<double>(i) / N);
            s.law = law;
            return s;
        }
        const auto eta = scale_kernel(prof, eps, g.dx());
        if (law == "nu-eps") return sample_tilt_nu_eps(eta, 0.0, nx, rng);
        if (law == "nu-eps-M") return sample_tilt_nu_eps_M(eta, g, rng);
        if (law == "height-nu-eps-M") return sample_height_nu_eps_M(eta, g, rng);
        throw ConfigError("sample.law", "unknown law '" + law +
                                            "' (pinned-bm, two-sided-bm, nu-eps, nu-eps-M, height-nu-eps-M, "
                                            "gibbs-nu-N, geometric-bm)");
    };
    if ((law == "gibbs-nu-N" || law == "nu-N") && N < 3) throw ConfigError("lattice.N", "must be at least 3");
    one(0);  // surfaces configuration errors before fanning out
    const auto samples = harness::parallel_map<FieldSample>(count, r.workers, one);

    std::ostringstream os;
    if (r.format == "csv") {
        os << "sample_id,x,value\n";
        for (std::size_t k = 0; k < samples.size(); ++k)
            for (std::size_t i = 0; i < samples[k].values.size(); ++i)
                os << k << ',' << format_double(samples[k].x[i]) << ',' << format_double(samples[k].values[i]) << '\n';
        r.emit(r.out_file.empty() ? "samples.csv" : r.out_file, os.str());
    } else {
        json a = json::array();
        for (std::size_t k = 0; k < samples.size(); ++k)
            a.push_back({{"sample_id", k}, {"law", law}, {"x", samples[k].x}, {"values", samples[k].values}});
        r.emit(r.out_file.empty() ? "samples.json" : r.out_file, a.dump(1) + "\n");
    }
    return ok;
}

int cmd_simulate(Run& r) {
    using namespace kpz;
    const spde::SimConfig c = sim_config(r.cfg);
    const std::int64_t n = get_int(r.cfg, "ensemble.trajectories", 1);
    if (n < 1) throw ConfigError("ensemble.trajectories", "must be at least 1");
    spde::ObservableSpec obs;
    obs.record_every = static_cast<int>(get_int(r.cfg, "sim.record_every", std::max(1, c.n_steps() / 100)));
    if (obs.record_every < 1) throw ConfigError("sim.record_every", "must be at least 1");
    const std::string wanted = get_string(r.cfg, "sim.observables",
                                          c.scheme == spde::Scheme::burgers ? "tilt-moments" : "tilt-moments,height-avg");
    obs.tilt_moments = false;
    std::stringstream ws(wanted);
    for (std::string item; std::getline(ws, item, ',');) {
        if (item == "tilt-moments") obs.tilt_moments = true;
        else if (item == "height-avg") obs.height_avg = true;
        else if (item == "ahat") obs.ahat = true;
        else if (item == "wrapped") obs.wrapped = true;
        else throw ConfigError("sim.observables", "unknown observable '" + item + "' (tilt-moments, height-avg, ahat, wrapped)");
    }
    if (obs.ahat || obs.wrapped) {
        const PeriodicGrid g(c.M, c.nx);
        const double pc = get_double(r.cfg, "bg.phi_center", 2.0), ph = get_double(r.cfg, "bg.phi_half_width", 0.5);
        const double rc = get_double(r.cfg, "bg.rho_center", 0.0), rh = get_double(r.cfg, "bg.rho_half_width", 0.5);
        obs.rho = spde::bump_weights(g, rc, rh);
        if (obs.ahat) {
            try {
                spde::require_disjoint(pc - ph, pc + ph, rc - rh, rc + rh, c.M);
            } catch (const OverlappingSupports& e) {
                throw ConfigError("bg.phi_center", e.what());
            }
            obs.phi = spde::bump_weights(g, pc, ph);
        }
    }
    const auto law = harness::stationary_law(c);

    const auto trajs = harness::parallel_map<spde::Trajectory>(n, r.workers, [&](std::int64_t id) {
        RngStream rng(c.seed, static_cast<std::uint64_t>(id));
        return spde::simulate(c, law(rng), obs, rng);
    });
    r.emit(r.format == "csv" ? "trajectories.csv" : "trajectories.json",
           rows_text(harness::to_table(trajs), r.format));

    json s;
    s["scheme"] = spde::scheme_name(c.scheme);
    s["trajectories"] = n;
    s["dt"] = c.step();
    s["steps"] = c.n_steps();
    s["config_hash"] = hex(harness::config_hash(r.cfg));
    spde::Solver solver(c);
    s["xi_eps"] = solver.xi();
    s["renorm_constant"] = solver.renorm_constant();
    s["final_state_0"] = trajs.front().final_state;
    r.emit("simulate.json", s.dump(2) + "\n");
    return ok;
}

int write_reports(Run& r, const std::vector<kpz::harness::SuiteReport>& reports, const std::string& summary_name) {
    json summary;
    summary["suites"] = json::array();
    bool any_fail = false;
    for (const auto& rep : reports) {
        r.emit(rep.suite + ".json", to_json(rep).dump(2) + "\n");
        if (!rep.raw.empty())
            r.emit(rep.suite + "_raw." + r.format, rows_text(rep.raw, r.format));
        r.manifest.seconds[rep.suite] = rep.seconds;
        const auto v = rep.verdict();
        any_fail = any_fail || v == kpz::Verdict::fail;
        summary["suites"].push_back({{"suite", rep.suite}, {"verdict", kpz::verdict_name(v)}, {"config_hash", hex(rep.config_hash)}});
        std::printf("%-20s %s\n", rep.suite.c_str(), kpz::verdict_name(v).c_str());
    }
    summary["verdict"] = any_fail ? "fail" : "pass";
    r.emit(summary_name, summary.dump(2) + "\n");
    return any_fail ? failed : ok;
}

int cmd_verify(Run& r) {
    using namespace kpz::harness;
    const std::string which = get_string(r.cfg, "verify.suite", "all");
    std::vector<Suite> suites;
    if (which == "all") {
        suites = all_suites();
    } else {
        try {
            suites.push_back(suite_from_name(which));
        } catch (const std::exception& e) {
            throw ConfigError("verify.suite", e.what());
        }
    }
    // validate everything before spending time on any suite
    std::vector<SuiteParams> params;
    for (auto s : suites) {
        params.push_back(suite_params(s, r.cfg));
        params.back().workers = r.workers;
    }
    std::vector<SuiteReport> reports;
    for (std::size_t i = 0; i < suites.size(); ++i) reports.push_back(run_suite(suites[i], params[i]));
    return write_reports(r, reports, "verify_summary.json");
}

int cmd_chaos(Run& r) {
    using namespace kpz::checks;
    const std::string which = get_string(r.cfg, "chaos.check", "all");
    std::vector<ChaosCheck> list;
    if (which == "all") {
        list = all_chaos_checks();
    } else {
        try {
            list.push_back(chaos_check_from_name(which));
        } catch (const std::exception& e) {
            throw ConfigError("chaos.check", e.what());
        }
    }
    std::vector<ChaosParams> params;
    for (auto k : list) params.push_back(chaos_params(k, r.cfg));
    std::vector<kpz::harness::SuiteReport> reports;
    for (std::size_t i = 0; i < list.size(); ++i) reports.push_back(run_chaos_check(list[i], params[i]));
    return write_reports(r, reports, "chaos_summary.json");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kpzlab: stationary KPZ / stochastic heat equation simulation and verification"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "out", format;
    std::uint64_t seed = 0;
    int workers = 0;
    auto* o_seed = app.add_option("--seed", seed, "master seed (default 0)");
    auto* o_out = app.add_option("--out", out_dir, "output directory")->capture_default_str();
    auto* o_workers = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    auto* o_format = app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--config", config_path, "key = value configuration file");

    Config cli;
    auto* sample = app.add_subcommand("sample", "draw fields from the Gaussian laws");
    std::string law;
    std::int64_t count = 0;
    auto* o_law = sample->add_option("--law", law, "pinned-bm, two-sided-bm, nu-eps, nu-eps-M, height-nu-eps-M, nu-N (gibbs-nu-N), geometric-bm");
    auto* o_count = sample->add_option("--count,--n", count, "number of samples");
    std::string params;
    auto* o_params = sample->add_option("--params", params, "comma separated overrides, e.g. M=4,nx=256,epsilon=0.1,N=64,c=1");

    auto* simulate = app.add_subcommand("simulate", "run the SPDE solver from the stationary law");
    std::string scheme;
    auto* o_scheme = simulate->add_option("--scheme", scheme, "kpz-smeared-drift, kpz-simple, burgers, she-coleHopf-smeared, she-limit-24, she-white");
    std::string s_M, s_nx, s_dt, s_t, s_eps, s_ens, s_obs;
    auto* o_sM = simulate->add_option("--M", s_M, "torus period");
    auto* o_snx = simulate->add_option("--nx", s_nx, "grid points");
    auto* o_sdt = simulate->add_option("--dt", s_dt, "time step (default dx^2/2)");
    auto* o_st = simulate->add_option("--t-end", s_t, "horizon");
    auto* o_seps = simulate->add_option("--epsilon", s_eps, "kernel width");
    auto* o_sens = simulate->add_option("--ensemble", s_ens, "number of trajectories");
    auto* o_sobs = simulate->add_option("--observables", s_obs, "tilt-moments,height-avg,ahat,wrapped");

    auto* verify = app.add_subcommand("verify", "run verification suites");
    std::string suite;
    bool raw = false;
    std::int64_t trajectories = 0;
    auto* o_suite = verify->add_option("--suite", suite, "suite name or all");
    verify->add_flag("--raw", raw, "also write per-trajectory observables");
    auto* o_traj = verify->add_option("--trajectories", trajectories, "ensemble size");

    auto* vlat = app.add_subcommand("verify-lattice", "lattice invariance suite");
    int N = 0;
    double l_eps = 0, l_dt = 0, l_t = 0;
    std::int64_t l_ens = 0;
    auto* o_N = vlat->add_option("--N", N, "lattice size");
    auto* o_leps = vlat->add_option("--epsilon", l_eps, "kernel width");
    auto* o_ldt = vlat->add_option("--dt", l_dt, "time step");
    auto* o_lt = vlat->add_option("--t-end", l_t, "horizon");
    auto* o_lens = vlat->add_option("--ensemble", l_ens, "ensemble size");

    auto* chaos = app.add_subcommand("chaos", "chaos expansion checks");
    std::string check;
    std::int64_t samples = 0;
    auto* o_check = chaos->add_option("--check", check, "remark31-1, remark31-2, j1, j1-asymmetric, diagram, exp-chaos, b-static or all");
    auto* o_samples = chaos->add_option("--samples", samples, "Monte Carlo samples");
    std::string c_eps;
    auto* o_ceps = chaos->add_option("--epsilon", c_eps, "epsilon or comma separated list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : config_error;
    }

    Run r;
    const auto t0 = std::chrono::steady_clock::now();
    r.manifest.started = utc_now();
    int rc = ok;
    try {
        if (!config_path.empty()) r.cfg = load_config_file(config_path);
        check_known_keys(r.cfg);
        auto set = [&](CLI::Option* o, const std::string& key, const std::string& v) {
            if (o->count() > 0) r.cfg[key] = v;
        };
        set(o_seed, "seed", std::to_string(seed));
        set(o_workers, "workers", std::to_string(workers));
        set(o_out, "output.dir", out_dir);
        set(o_format, "output.format", format);
        set(o_law, "sample.law", law);
        set(o_count, "sample.count", std::to_string(count));
        set(o_scheme, "sim.scheme", scheme);
        set(o_suite, "verify.suite", suite);
        if (raw) r.cfg["output.raw"] = "true";
        set(o_traj, "ensemble.trajectories", std::to_string(trajectories));
        set(o_N, "lattice.N", std::to_string(N));
        set(o_leps, "kernel.epsilon", format_double(l_eps));
        set(o_ldt, "sim.dt", format_double(l_dt));
        set(o_lt, "sim.t_end", format_double(l_t));
        set(o_lens, "ensemble.trajectories", std::to_string(l_ens));
        set(o_check, "chaos.check", check);
        set(o_samples, "chaos.samples", std::to_string(samples));
        set(o_ceps, "kernel.epsilon_list", c_eps);
        set(o_sM, "sim.M", s_M);
        set(o_snx, "sim.nx", s_nx);
        set(o_sdt, "sim.dt", s_dt);
        set(o_st, "sim.t_end", s_t);
        set(o_seps, "kernel.epsilon", s_eps);
        set(o_sens, "ensemble.trajectories", s_ens);
        set(o_sobs, "sim.observables", s_obs);
        if (o_params->count() > 0) {
            static const std::map<std::string, std::string> alias = {
                {"M", "sim.M"}, {"nx", "sim.nx"}, {"epsilon", "kernel.epsilon"}, {"kernel", "kernel.name"},
                {"N", "lattice.N"}, {"c", "shear.c"}};
            std::stringstream ps(params);
            for (std::string item; std::getline(ps, item, ',');) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw ConfigError("--params", "expected key=value, got '" + item + "'");
                std::string k = item.substr(0, eq);
                if (auto it = alias.find(k); it != alias.end()) k = it->second;
                r.cfg[k] = item.substr(eq + 1);
            }
            check_known_keys(r.cfg);
        }

        r.out = get_string(r.cfg, "output.dir", "out");
        // sample accepts a file name for --out; the manifest goes next to it
        if (sample->parsed() && (r.out.extension() == ".csv" || r.out.extension() == ".json")) {
            r.out_file = r.out.filename().string();
            if (!r.cfg.count("output.format")) r.cfg["output.format"] = r.out.extension().string().substr(1);
            r.out = r.out.has_parent_path() ? r.out.parent_path() : fs::path(".");
        }
        r.format = get_string(r.cfg, "output.format", "csv");
        if (r.format != "csv" && r.format != "json") throw ConfigError("output.format", "expected csv or json");
        const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        r.workers = static_cast<int>(get_int(r.cfg, "workers", hw));
        if (r.workers < 1) throw ConfigError("workers", "must be at least 1");
        r.manifest.seed = get_seed(r.cfg);
        r.manifest.seed_defaulted = r.cfg.find("seed") == r.cfg.end();
        r.manifest.config = r.cfg;

        if (sample->parsed()) {
            r.manifest.command = "sample";
            rc = cmd_sample(r);
        } else if (simulate->parsed()) {
            r.manifest.command = "simulate";
            rc = cmd_simulate(r);
        } else if (verify->parsed()) {
            r.manifest.command = "verify";
            rc = cmd_verify(r);
        } else if (vlat->parsed()) {
            r.manifest.command = "verify-lattice";
            r.cfg["verify.suite"] = "lattice";
            r.manifest.config = r.cfg;
            rc = cmd_verify(r);
        } else if (chaos->parsed()) {
            r.manifest.command = "chaos";
            rc = cmd_chaos(r);
        }
    } catch (const kpz::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        rc = config_error;
    } catch (const kpz::BlowUp& e) {
        std::cerr << "blow-up at t=" << e.time << " (trajectory " << e.trajectory << "): " << e.what() << '\n';
        rc = blow_up;
    } catch (const kpz::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = config_error;
    }

    if (r.manifest.seed_defaulted && rc != config_error)
        std::cerr << "note: no seed given, using 0\n";
    if (!r.out.empty()) {
        r.manifest.finished = utc_now();
        r.manifest.seconds["total"] = seconds_since(t0);
        r.manifest.exit_code = rc;
        try {
            write_file(r.out, "manifest.json", r.manifest.to_json().dump(2) + "\n");
        } catch (const kpz::IoError& e) {
            std::cerr << "error: " << e.what() << '\n';
            if (rc == ok) rc = config_error;
        }
    }
    return rc;
}
