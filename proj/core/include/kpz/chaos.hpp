#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kpz/gaussian_fields.hpp"
#include "kpz/kernels.hpp"
#include "kpz/stats.hpp"

// Multiple Wiener integrals follow the convention I(phi_n) = (1/n!) int phi_n dB^n,
// so E[I(phi_n)^2] = ||phi_n||^2 / n! and e^{I(f) - |f|^2/2} = sum_n I(f^{(x)n}).
namespace kpz::chaos {

// Midpoint grid on [lo, hi].
struct ChaosGrid {
    double lo = -8.0, hi = 8.0;
    int n = 2048;
    double du() const { return (hi - lo) / n; }
    double u(int i) const { return lo + (i + 0.5) * du(); }
    // nearest grid index to x
    int index(double x) const;
    static ChaosGrid window(double W = 8.0, int n = 2048) { return {-W, W, n}; }
};

struct ChaosKernel {
    int order = 0;
    ChaosGrid grid;
    std::vector<double> v;  // row-major, n^order entries; order 0 holds one scalar

    ChaosKernel() = default;
    ChaosKernel(int order, ChaosGrid g);
    static ChaosKernel constant(double c, ChaosGrid g);
    std::size_t size() const { return v.size(); }
    double& at(std::span<const int> idx);
    double at(std::span<const int> idx) const;
    double& at2(int i, int j) { return v[static_cast<std::size_t>(i) * grid.n + j]; }
    double at2(int i, int j) const { return v[static_cast<std::size_t>(i) * grid.n + j]; }
    double norm2() const;  // grid L2 norm squared
};

// Refuses kernels with more than this many grid cells.
constexpr std::size_t kMaxCells = 50'000'000;

double ito_norm(std::span<const ChaosKernel> phis);
ChaosKernel symmetrize(const ChaosKernel& k);
// max |k(idx) - k(sigma idx)| over `checks` random index tuples and transpositions
double symmetry_defect(const ChaosKernel& k, int checks, RngStream& rng);

// Psi^eps(x) = I(2 eta^eps(x - .) (x) eta^eps(x - .)), i.e. (d h)^2 - xi^eps.
ChaosKernel psi_eps_kernel(Profile p, double eps, double x, const ChaosGrid& g);
// Kernel of Psi^eps * eta2^eps - Psi^eps (the factor 2 included).
ChaosKernel diff_kernel(Profile p, double eps, double x, const ChaosGrid& g);

// Closed forms for the standard Gaussian eta as they are usually quoted:
// C1 = (1/(pi eps^2))(1/(4 sqrt5) - 1/(2 sqrt3) + 1/4), C2 = eta2(0)^2/eps^2.
// Both equal the squared L2 norm of the kernel WITHOUT the factor 2; the
// second moments themselves are twice these values.
double remark_formula_diff(double eps);
double remark_formula_psi(double eps);

// ---- diagrams ----
struct Vertex {
    int group = 0, slot = 0;
    friend bool operator==(const Vertex&, const Vertex&) = default;
};
struct Diagram {
    std::vector<int> orders;
    std::vector<std::pair<Vertex, Vertex>> edges;
    int total() const;
    bool complete() const { return 2 * static_cast<int>(edges.size()) == total(); }
};

std::vector<Diagram> diagram_enumerate(const std::vector<int>& orders);
// Independent oracle: every subset of the cross-group edges that is a matching.
std::uint64_t diagram_count_bruteforce(const std::vector<int>& orders);
// (N - 2|gamma|)! / (n_1! ... n_m!)
double diagram_prefactor(const Diagram& d);
// Contracted kernel (symmetrized), order N - 2|gamma|, on the common grid.
ChaosKernel diagram_contract(std::span<const ChaosKernel> ks, const Diagram& d);
// E[I(phi_1) ... I(phi_m)] from the complete diagrams.
double expected_product(std::span<const ChaosKernel> ks);

// Discrete multiple integral (1/n!) sum phi(i_1..i_n) dB_i1 ... dB_in; kernels
// must vanish on diagonals.
double discrete_wiener_integral(const ChaosKernel& k, std::span<const double> dB);
// Random symmetric kernel with zero diagonals on a small grid.
ChaosKernel random_kernel(int order, const ChaosGrid& g, RngStream& rng);
// Monte Carlo estimate of E[prod I(phi_l)].
EnsembleEstimate mc_product_moment(std::span<const ChaosKernel> ks, std::int64_t samples, std::uint64_t seed);

// ---- exponential chaos of Y(x)/Y_rho ----
// rho: Epanechnikov bump on [center - half, center + half]
struct Rho {
    double center = 0.0, half = 0.5;
    double lo() const { return center - half; }
    double hi() const { return center + half; }
    double density(double u) const;
    double tail(double u) const;  // int_u^inf rho
};

double theta(const Rho& r, double u);
double phi_x(const Rho& r, double x, double u);
ChaosKernel phi_x_kernel(const Rho& r, double x, const ChaosGrid& g);
// a(x) = (1/2) int phi_x^2 by adaptive quadrature
double a_of_x(const Rho& r, double x);
// kernels e^{a(x)} phi_x^{(x)n}, n = 0..n_max
std::vector<ChaosKernel> exp_chaos_Y(const Rho& r, double x, int n_max, const ChaosGrid& g);
// MC of E[exp(B(x) - int B rho)] with grid Brownian paths
EnsembleEstimate mc_exp_chaos(const Rho& r, double x, std::int64_t samples, std::uint64_t seed, double du = 1.0 / 256);

// ---- J constants ----
enum class RLaw { gaussian, uniform, triangle, epanechnikov, one_sided };
const char* rlaw_name(RLaw l);
// One draw of R with the eta2 law (sum of two eta draws, or uniform directly).
double sample_R(RLaw l, RngStream& rng);
// E[1{R1+R3<=0, R2+R3<=0}] - E[1{R1<=0, R2<=0}] by MC; ties count as failures.
EnsembleEstimate j1_mc(RLaw l, std::int64_t samples, std::uint64_t seed, bool asymmetric_form = false);
// Same by quadrature: int eta2(r) F(-r)^2 dr - F(0)^2 (or with survival functions).
double j1_quadrature(RLaw l, bool asymmetric_form = false);
// (int_0^inf eta4, int_0^inf eta2) for the side condition of the asymmetric form.
std::pair<double, double> positive_masses(RLaw l);

// J2^eps(x) and J3^eps(x) by quadrature over R ~ eta2^eps for eta = profile.
double j2(Profile p, double eps, const Rho& r, double x, double step);
double j3(Profile p, double eps, const Rho& r, double x, double step);

// ---- second chaos of Phi * Y(x)/Y_rho ----
// phis[n] is the order-n kernel of Phi (phis[0] is the constant term).
std::array<ChaosKernel, 4> second_chaos_of_product(std::span<const ChaosKernel> phis, const Rho& r, double x);

// ---- static Boltzmann-Gibbs check ----
struct StaticBConfig {
    Profile profile = Profile::epanechnikov;
    double eps = 0.1;
    double phi_lo = 2.0, phi_hi = 3.0;  // Epanechnikov bump on this interval
    double phi_scale = 1.0;
    Rho rho;
    std::int64_t samples = 100000;
    std::uint64_t seed = 0;
    int points_per_eps = 20;
    double constant = 1.0 / 12.0;  // subtracted inside the braces; 0 gives the control
    // When set, the estimate is E[B^eps(phi, Y) Phi] for the first-chaos test
    // functional Phi = int f dB, f = 1 - t^2 on this interval.
    std::optional<std::pair<double, double>> test_bump;
};
// MC estimate of E[B^eps(phi, Y)] with
// B^eps(x,Y) = {(d log Y)^2 * eta2 - (d log Y)^2 - 1/12} Y(x)/Y_rho.
EnsembleEstimate static_b_expectation(const StaticBConfig& c);

// ---- Dirichlet norm and pinning ----
// (1/2) sum_n (1/n!) int (D phi_{n+1} * eta^{(x)(n+1)})^2 for kernels of order 1 and 2.
double dirichlet_norm(std::span<const ChaosKernel> phis, Profile p, double eps);
// P^M: product over coordinates of (I - average over that coordinate); grid must be [0, M).
ChaosKernel project_pinned(const ChaosKernel& k);
double inner(const ChaosKernel& a, const ChaosKernel& b);
// kernel of Psi^{eps,M}(x): 2 (eta(x - x1) - 1/M)(eta(x - x2) - 1/M) on [0, M)
ChaosKernel psi_eps_M_kernel(Profile p, double eps, double x, const ChaosGrid& torus);

}  // namespace kpz::chaos
