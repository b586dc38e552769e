#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpz/checks.hpp"
#include "kpz/harness.hpp"
#include "kpz/spde.hpp"

namespace kpzcli {

using Config = std::map<std::string, std::string>;
using nlohmann::json;

// Flat "key = value" text; '#' starts a comment. Throws ConfigError naming the line.
Config parse_config_text(const std::string& text);
Config load_config_file(const std::filesystem::path& path);
// Rejects keys outside the known set.
void check_known_keys(const Config& c);
const std::vector<std::string>& known_keys();

double get_double(const Config& c, const std::string& key, double fallback);
std::int64_t get_int(const Config& c, const std::string& key, std::int64_t fallback);
std::uint64_t get_seed(const Config& c);
std::string get_string(const Config& c, const std::string& key, const std::string& fallback);
bool get_bool(const Config& c, const std::string& key, bool fallback);
std::vector<double> get_list(const Config& c, const std::string& key, const std::vector<double>& fallback);

kpz::spde::SimConfig sim_config(const Config& c);
kpz::harness::SuiteParams suite_params(kpz::harness::Suite s, const Config& c);
kpz::checks::ChaosParams chaos_params(kpz::checks::ChaosCheck k, const Config& c);

std::string hex(std::uint64_t v);

json to_json(const kpz::EnsembleEstimate& e);
json to_json(const kpz::harness::StationarityReport& r);
// Deterministic content only; timings go to the manifest.
json to_json(const kpz::harness::SuiteReport& r);

// Header trajectory_id,t,observable,value; floats at 17 significant digits.
void write_csv(std::ostream& os, const std::vector<kpz::harness::RawRow>& rows);
std::string format_double(double v);

struct Manifest {
    std::string command;
    Config config;
    std::uint64_t seed = 0;
    bool seed_defaulted = false;
    std::string started, finished;
    std::vector<std::string> outputs;
    std::map<std::string, double> seconds;
    int exit_code = 0;

    json to_json() const;
};
std::string utc_now();

// Writes text to dir/name, creating dir; throws IoError on failure.
std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);

}  // namespace kpzcli
