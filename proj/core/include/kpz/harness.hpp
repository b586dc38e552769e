#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "kpz/errors.hpp"
#include "kpz/gaussian_fields.hpp"
#include "kpz/spde.hpp"
#include "kpz/stats.hpp"

namespace kpz::harness {

// Runs f(i) for i in [0, n) on up to `workers` threads and returns the results
// in index order. The first failure (lowest index) is rethrown after all
// workers stop; BlowUp is re-tagged with the trajectory index.
template <class T, class F>
std::vector<T> parallel_map(std::int64_t n, int workers, F&& f) {
    std::vector<T> out(static_cast<std::size_t>(n));
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::int64_t bad_index = -1;
    std::exception_ptr bad;
    auto run = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n || stop.load()) return;
            try {
                out[static_cast<std::size_t>(i)] = f(i);
            } catch (const BlowUp& e) {
                std::lock_guard lk(mu);
                if (bad_index < 0 || i < bad_index) {
                    bad_index = i;
                    bad = std::make_exception_ptr(BlowUp(e.what(), e.time, i));
                }
                stop = true;
            } catch (...) {
                std::lock_guard lk(mu);
                if (bad_index < 0 || i < bad_index) {
                    bad_index = i;
                    bad = std::current_exception();
                }
                stop = true;
            }
        }
    };
    const int w = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::int64_t>(n, 1))));
    if (w == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < w; ++k) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (bad) std::rethrow_exception(bad);
    return out;
}

// One row of the raw observable table.
struct RawRow {
    std::int64_t trajectory_id = 0;
    double t = 0.0;
    std::string observable;
    double value = 0.0;
};

// Draws the initial state for a scheme from its stationary law: heights
// B^M * eta shifted so that the rho-average is uniform on [0,1), Burgers tilts,
// exp of those for the smeared SHE, exp(pinned BM) for the white-noise SHE.
using InitialLaw = std::function<std::vector<double>(RngStream&)>;
InitialLaw stationary_law(const spde::SimConfig& c);

// Simulates n_traj trajectories with stream index = trajectory id. Requires n_traj >= 100.
std::vector<spde::Trajectory> run_ensemble(const spde::SimConfig& c, std::int64_t n_traj,
                                           const spde::ObservableSpec& obs, const InitialLaw& law, int workers);
std::vector<RawRow> to_table(const std::vector<spde::Trajectory>& trajs, std::int64_t first_id = 0);

struct ObservableDrift {
    std::string name;
    EnsembleEstimate at_0, at_T;
    double combined_stderr = 0.0;
    double allowance = 0.0;
    Verdict verdict = Verdict::informational;
};

struct StationarityReport {
    std::vector<ObservableDrift> observables;
    std::uint64_t config_hash = 0;
    Verdict verdict() const;
};

// Drift of each recorded observable between t = 0 and t = T; passes iff
// |drift| <= 3 combined stderr + allowance * |t=0 estimate|.
StationarityReport invariance_test(const spde::SimConfig& c, const InitialLaw& law, const spde::ObservableSpec& obs,
                                   std::int64_t n_traj, int workers, double allowance);
StationarityReport drift_report(const std::vector<spde::Trajectory>& trajs, double allowance);

struct Check {
    std::string name;
    EnsembleEstimate est;
    std::string rule;  // pre-registered criterion, human readable
};

struct SuiteReport {
    std::string suite;
    std::map<std::string, std::string> params;
    std::uint64_t config_hash = 0;
    std::vector<Check> checks;
    std::vector<StationarityReport> stationarity;
    std::vector<std::string> notes;
    std::vector<RawRow> raw;
    double seconds = 0.0;
    // fail if any check fails, pass if at least one passes, else informational
    Verdict verdict() const;
};

// FNV-1a over the sorted "key=value" lines.
std::uint64_t config_hash(const std::map<std::string, std::string>& kv);

struct SuiteParams {
    std::int64_t trajectories = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    bool raw = false;
    Profile kernel = Profile::epanechnikov;
    double M = 4.0;
    int nx = 256;
    double eps = 0.1;
    double t_end = 1.0;
    double dt = 0.0;  // 0: scheme default
    double allowance = 0.05;
    std::int64_t halving_trajectories = 0;  // 0 disables the halving re-run
    std::vector<double> eps_list;
    std::vector<double> M_list;
    // bg / wrapping geometry
    double phi_center = 2.0, phi_half = 0.5;
    double rho_center = 0.0, rho_half = 0.5;
    // lattice
    int N = 64;
    // geometric-BM shear
    double shear_c = 1.0;
    double ks_level = 0.01;

    std::map<std::string, std::string> to_kv() const;
};

enum class Suite { lattice, burgers, she_tilt, wrapped_uniform, bg, geometric_bm, m_sweep };
Suite suite_from_name(const std::string& s);
std::string suite_name(Suite s);
std::vector<Suite> all_suites();
// Pre-registered defaults (sample sizes and geometry) for each suite.
SuiteParams suite_defaults(Suite s);

SuiteReport run_suite(Suite s, const SuiteParams& p);

SuiteReport lattice_suite(const SuiteParams& p);
SuiteReport burgers_suite(const SuiteParams& p);
SuiteReport she_tilt_suite(const SuiteParams& p);
SuiteReport wrapped_uniform_suite(const SuiteParams& p);
SuiteReport bg_suite(const SuiteParams& p);
SuiteReport geometric_bm_suite(const SuiteParams& p);
SuiteReport m_sweep_suite(const SuiteParams& p);

struct BgPoint {
    double eps = 0.0;
    EnsembleEstimate V;        // E[sup_t (int_0^t Ahat ds)^2] on the step grid
    EnsembleEstimate V_T;      // E[(int_0^T Ahat ds)^2]
    EnsembleEstimate control;  // E[int_0^T A ds] without the -Y/24 term
    EnsembleEstimate V_control;
};
// One BG curve point. Throws OverlappingSupports when phi and rho meet.
BgPoint bg_estimator(double eps, const SuiteParams& p, bool zero_integrand = false);

// Fraction of `reps` synthetic Gaussian ensembles of size n whose 3-stderr band covers the mean.
double coverage_3se(int reps, int n, std::uint64_t seed);

// W1 distance between the empirical law of xs and N(0, var).
double w1_to_normal(std::vector<double> xs, double var);

}  // namespace kpz::harness
