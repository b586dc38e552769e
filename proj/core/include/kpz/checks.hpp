#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpz/harness.hpp"

// Deterministic and Monte Carlo checks of the exact identities and constants:
// lattice algebra, the energy gradient, the 1/12 constant, second moments of
// the smeared squared gradient, the diagram formula, exponential chaos and the
// static Boltzmann-Gibbs null.
namespace kpz::checks {

enum class ChaosCheck { remark31_1, remark31_2, j1, j1_asymmetric, diagram, exp_chaos, b_static };

ChaosCheck chaos_check_from_name(const std::string& s);
std::string chaos_check_name(ChaosCheck c);
std::vector<ChaosCheck> all_chaos_checks();

struct ChaosParams {
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> eps_list;
    std::vector<double> x_list;
};
ChaosParams chaos_defaults(ChaosCheck c);
harness::SuiteReport run_chaos_check(ChaosCheck c, const ChaosParams& p);

// Sum (G1+G2) Delta h and both divergence sums for `samples` random heights at each N.
harness::SuiteReport lattice_identities(const std::vector<int>& Ns, int samples, std::uint64_t seed);
// grad_energy against central finite differences and against the closed form.
harness::SuiteReport gradient_check(int N, int samples, std::uint64_t seed);

}  // namespace kpz::checks
