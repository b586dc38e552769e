#include "cli_support.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "kpz/errors.hpp"

namespace kpzcli {

using kpz::ConfigError;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool has(const Config& c, const std::string& k) { return c.find(k) != c.end(); }

}  // namespace

Config parse_config_text(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config", "line " + std::to_string(no) + ": expected 'key = value'");
        const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (k.empty()) throw ConfigError("config", "line " + std::to_string(no) + ": empty key");
        c[k] = v;
    }
    return c;
}

Config load_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("--config", "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "seed", "workers", "output.dir", "output.format", "output.raw",
        "sim.scheme", "sim.M", "sim.nx", "sim.dt", "sim.t_end", "sim.renorm", "sim.noise_scale", "sim.record_every",
        "sim.observables",
        "sim.M_list", "kernel.name", "kernel.epsilon", "kernel.epsilon_list",
        "ensemble.trajectories", "ensemble.halving_trajectories",
        "verify.suite", "verify.allowance", "verify.ks_level",
        "bg.phi_center", "bg.phi_half_width", "bg.rho_center", "bg.rho_half_width",
        "lattice.N", "shear.c", "sample.law", "sample.count",
        "chaos.check", "chaos.samples", "chaos.x_list",
    };
    return keys;
}

void check_known_keys(const Config& c) {
    const auto& keys = known_keys();
    for (const auto& [k, v] : c)
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(k, "unknown configuration key");
}

double get_double(const Config& c, const std::string& key, double fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + it->second + "'");
    }
}

std::int64_t get_int(const Config& c, const std::string& key, std::int64_t fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    std::int64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError(key, "expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t get_seed(const Config& c) {
    auto it = c.find("seed");
    if (it == c.end()) return 0;
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("seed", "expected a non-negative integer, got '" + s + "'");
    return v;
}

std::string get_string(const Config& c, const std::string& key, const std::string& fallback) {
    auto it = c.find(key);
    return it == c.end() ? fallback : it->second;
}

bool get_bool(const Config& c, const std::string& key, bool fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + it->second + "'");
}

std::vector<double> get_list(const Config& c, const std::string& key, const std::vector<double>& fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        Config one{{key, trim(item)}};
        out.push_back(get_double(one, key, 0.0));
    }
    if (out.empty()) throw ConfigError(key, "expected a comma separated list of numbers");
    return out;
}

kpz::spde::SimConfig sim_config(const Config& c) {
    using namespace kpz::spde;
    SimConfig s;
    try {
        s.scheme = scheme_from_name(get_string(c, "sim.scheme", scheme_name(s.scheme)));
    } catch (const std::exception& e) {
        throw ConfigError("sim.scheme", e.what());
    }
    try {
        s.renorm = renorm_from_name(get_string(c, "sim.renorm", renorm_name(s.renorm)));
    } catch (const std::exception& e) {
        throw ConfigError("sim.renorm", e.what());
    }
    try {
        s.kernel = kpz::profile_from_name(get_string(c, "kernel.name", kpz::profile_name(s.kernel)));
    } catch (const std::exception& e) {
        throw ConfigError("kernel.name", e.what());
    }
    s.M = get_double(c, "sim.M", s.M);
    s.nx = static_cast<int>(get_int(c, "sim.nx", s.nx));
    s.dt = get_double(c, "sim.dt", s.dt);
    s.t_end = get_double(c, "sim.t_end", s.t_end);
    s.eps = get_double(c, "kernel.epsilon", s.eps);
    s.noise_scale = get_double(c, "sim.noise_scale", s.noise_scale);
    s.seed = get_seed(c);
    validate(s);
    return s;
}

kpz::harness::SuiteParams suite_params(kpz::harness::Suite s, const Config& c) {
    using kpz::harness::Suite;
    kpz::harness::SuiteParams p = kpz::harness::suite_defaults(s);
    p.trajectories = get_int(c, "ensemble.trajectories", p.trajectories);
    p.halving_trajectories = get_int(c, "ensemble.halving_trajectories", p.halving_trajectories);
    p.seed = get_seed(c);
    p.workers = static_cast<int>(get_int(c, "workers", p.workers));
    p.raw = get_bool(c, "output.raw", p.raw);
    if (has(c, "kernel.name")) {
        try {
            p.kernel = kpz::profile_from_name(c.at("kernel.name"));
        } catch (const std::exception& e) {
            throw ConfigError("kernel.name", e.what());
        }
    }
    p.eps = get_double(c, "kernel.epsilon", p.eps);
    p.eps_list = get_list(c, "kernel.epsilon_list", p.eps_list);
    p.M = get_double(c, "sim.M", p.M);
    p.M_list = get_list(c, "sim.M_list", p.M_list);
    p.nx = static_cast<int>(get_int(c, "sim.nx", p.nx));
    p.dt = get_double(c, "sim.dt", p.dt);
    p.t_end = get_double(c, "sim.t_end", p.t_end);
    p.allowance = get_double(c, "verify.allowance", p.allowance);
    p.ks_level = get_double(c, "verify.ks_level", p.ks_level);
    p.phi_center = get_double(c, "bg.phi_center", p.phi_center);
    p.phi_half = get_double(c, "bg.phi_half_width", p.phi_half);
    p.rho_center = get_double(c, "bg.rho_center", p.rho_center);
    p.rho_half = get_double(c, "bg.rho_half_width", p.rho_half);
    p.N = static_cast<int>(get_int(c, "lattice.N", p.N));
    p.shear_c = get_double(c, "shear.c", p.shear_c);

    if (p.trajectories < 100)
        throw ConfigError("ensemble.trajectories", "need at least 100 trajectories, got " + std::to_string(p.trajectories));
    if (p.workers < 1) throw ConfigError("workers", "must be at least 1");
    if (s == Suite::bg) {
        try {
            kpz::spde::require_disjoint(p.phi_center - p.phi_half, p.phi_center + p.phi_half,
                                        p.rho_center - p.rho_half, p.rho_center + p.rho_half, p.M);
        } catch (const kpz::OverlappingSupports& e) {
            throw ConfigError("bg.phi_center", e.what());
        }
    }
    return p;
}

kpz::checks::ChaosParams chaos_params(kpz::checks::ChaosCheck k, const Config& c) {
    kpz::checks::ChaosParams p = kpz::checks::chaos_defaults(k);
    p.samples = get_int(c, "chaos.samples", p.samples);
    p.seed = get_seed(c);
    p.eps_list = get_list(c, "kernel.epsilon_list", p.eps_list);
    p.x_list = get_list(c, "chaos.x_list", p.x_list);
    if (p.samples < 0) throw ConfigError("chaos.samples", "must be non-negative");
    return p;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json to_json(const kpz::EnsembleEstimate& e) {
    json j;
    j["estimate"] = e.estimate;
    j["stderr"] = e.std_error;
    j["n"] = e.n;
    j["seed"] = e.seed;
    j["target"] = e.target ? json(*e.target) : json(nullptr);
    j["allowance"] = e.allowance;
    j["verdict"] = kpz::verdict_name(e.verdict);
    return j;
}

json to_json(const kpz::harness::StationarityReport& r) {
    json j;
    j["config_hash"] = hex(r.config_hash);
    j["verdict"] = kpz::verdict_name(r.verdict());
    j["observables"] = json::array();
    for (const auto& o : r.observables) {
        json x;
        x["name"] = o.name;
        x["t0"] = to_json(o.at_0);
        x["tT"] = to_json(o.at_T);
        x["drift"] = o.at_T.estimate - o.at_0.estimate;
        x["combined_stderr"] = o.combined_stderr;
        x["allowance"] = o.allowance;
        x["verdict"] = kpz::verdict_name(o.verdict);
        j["observables"].push_back(x);
    }
    return j;
}

json to_json(const kpz::harness::SuiteReport& r) {
    json j;
    j["suite"] = r.suite;
    j["verdict"] = kpz::verdict_name(r.verdict());
    j["config_hash"] = hex(r.config_hash);
    j["params"] = r.params;
    j["checks"] = json::array();
    for (const auto& c : r.checks) {
        json x = to_json(c.est);
        x["name"] = c.name;
        x["rule"] = c.rule;
        j["checks"].push_back(x);
    }
    j["stationarity"] = json::array();
    for (const auto& s : r.stationarity) j["stationarity"].push_back(to_json(s));
    j["notes"] = r.notes;
    return j;
}

void write_csv(std::ostream& os, const std::vector<kpz::harness::RawRow>& rows) {
    os << "trajectory_id,t,observable,value\n";
    for (const auto& r : rows) {
        std::string name = r.observable;
        if (name.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            name = q + "\"";
        }
        os << r.trajectory_id << ',' << format_double(r.t) << ',' << name << ',' << format_double(r.value) << '\n';
    }
}

json Manifest::to_json() const {
    json j;
    j["tool"] = "kpzlab";
    j["version"] = "0.1.0";
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = hex(kpz::harness::config_hash(config));
    j["seed"] = seed;
    j["seed_defaulted"] = seed_defaulted;
    j["started"] = started;
    j["finished"] = finished;
    j["outputs"] = outputs;
    j["seconds"] = seconds;
    j["exit_code"] = exit_code;
    return j;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw kpz::IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw kpz::IoError("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw kpz::IoError("write to '" + path.string() + "' failed");
    return path;
}

}  // namespace kpzcli
