#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpz/gaussian_fields.hpp"
#include "kpz/kernels.hpp"

namespace kpz::spde {

enum class Scheme { kpz_smeared_drift, kpz_simple, burgers, she_cole_hopf_smeared, she_limit_24, she_white };
enum class RenormMode { xi_eps, xi_eps_M, none };

Scheme scheme_from_name(std::string_view s);
std::string scheme_name(Scheme s);
RenormMode renorm_from_name(std::string_view s);
std::string renorm_name(RenormMode r);

// Schemes whose state is a positive field Z rather than a height or tilt.
bool is_she(Scheme s);
bool is_smeared(Scheme s);

struct SimConfig {
    Scheme scheme = Scheme::kpz_smeared_drift;
    double M = 4.0;
    int nx = 256;
    double dt = 0.0;  // 0 selects dx^2/2
    double t_end = 1.0;
    Profile kernel = Profile::epanechnikov;
    double eps = 0.1;
    RenormMode renorm = RenormMode::xi_eps;
    std::uint64_t seed = 0;
    double noise_scale = 1.0;

    double dx() const { return M / nx; }
    double step() const { return dt > 0.0 ? dt : 0.5 * dx() * dx(); }
    int n_steps() const;
};

// Throws ConfigError naming the field and the violated constraint.
void validate(const SimConfig& c);

// Explicit Euler-Maruyama on the torus grid. The spatial discretization of the
// quadratic term is S(h)_i = (u_i^2 + u_{i-1}^2 + u_i u_{i-1})/3 with forward
// differences u_i = (h_{i+1} - h_i)/dx, the same combination that makes the
// lattice Gibbs measure invariant.
class Solver {
public:
    explicit Solver(const SimConfig& c);

    const SimConfig& config() const { return c_; }
    const PeriodicGrid& grid() const { return g_; }
    double dt() const { return dt_; }
    double renorm_constant() const { return renorm_; }
    // grid quadrature of (eta^eps)^2; equals the smeared noise variance rate
    double xi() const { return xi_; }
    const MollifierKernel& eta() const { return eta_; }
    const MollifierKernel& eta2() const { return eta2_; }

    // One step with caller-supplied standard normals z (one per cell).
    void step(std::span<double> f, std::span<const double> z, double dt) const;
    void step(std::span<double> f, RngStream& rng) const;
    // Throws BlowUp if the field left the admissible range.
    void check(std::span<const double> f, double t) const;

private:
    SimConfig c_;
    PeriodicGrid g_;
    double dt_;
    MollifierKernel eta_, eta2_;
    Stencil eta_st_, eta2_st_;
    double xi_ = 0.0;
    double renorm_ = 0.0;
};

// S(h) on the torus, spacing dx.
void squared_gradient(std::span<const double> h, double dx, std::span<double> out);

std::vector<double> cole_hopf(std::span<const double> h);
std::vector<double> inverse_cole_hopf(std::span<const double> Z);

// rho(x_i) for an Epanechnikov bump centered at `center` with half-width
// `half_width`, periodized and normalized so that sum rho dx = 1.
std::vector<double> bump_weights(const PeriodicGrid& g, double center, double half_width);
// Default rho on [-0.5, 0.5] and a disjoint rho-bar on [M/2 - 0.5, M/2 + 0.5].
std::vector<double> default_rho(const PeriodicGrid& g);
std::vector<double> default_rho_bar(const PeriodicGrid& g);

struct WrapEvent {
    double t = 0.0;
    long old_count = 0, new_count = 0;
    // multiplier of Y at the jump: (e-1) from Y_rho = 1 to e, (1/e - 1) from e to 1
    double jump_coeff = 0.0;
};

struct WrappedState {
    std::vector<double> g;
    std::vector<double> Y;
    long N_count = 0;
    double g_rho = 0.0;
    double Y_rho = 1.0;
};

double average(std::span<const double> f, std::span<const double> rho, double dx);
WrappedState wrap(std::span<const double> h, std::span<const double> rho, double dx);
// Recompute for a new height; appends a WrapEvent when N_count changes.
void advance_wrap(WrappedState& s, std::span<const double> h, std::span<const double> rho, double dx, double t,
                  std::vector<WrapEvent>* log);

// A^eps(x_i, Y) = (1/2) Y {S(log Y) * eta2 - S(log Y)} on every grid point.
std::vector<double> nonlinear_A(std::span<const double> Y, const PeriodicGrid& g, const MollifierKernel& eta2);
// int (A^eps - Y/24) phi dx
double residual_Ahat(std::span<const double> phi, std::span<const double> Y, const PeriodicGrid& g,
                     const MollifierKernel& eta2);

// Torus distance between [a0,a1] and [b0,b1]; <= 0 when they overlap.
double support_gap(double a0, double a1, double b0, double b1, double M);
void require_disjoint(double a0, double a1, double b0, double b1, double M);

double heat_kernel_pM(double t, double x, double y, double M);

// p^M time stepping: Z <- e^{dt/24} P_dt [Z (1 + dW)], with P_dt the
// quadrature of p^M on the grid.
class MildSolver {
public:
    MildSolver(const PeriodicGrid& g, double dt, bool limit24, double noise_scale = 1.0);
    void step(std::span<double> Z, std::span<const double> z) const;
    const PeriodicGrid& grid() const { return g_; }
    double dt() const { return dt_; }

private:
    PeriodicGrid g_;
    double dt_;
    bool limit24_;
    double noise_scale_;
    std::vector<double> P_;
};

std::vector<double> mild_solve_she(std::span<const double> initial, const PeriodicGrid& g, double T, double dt,
                                   bool limit24, RngStream& rng, double noise_scale = 1.0);

struct ObservableSpec {
    bool tilt_moments = true;
    bool height_avg = false;
    bool ahat = false;
    bool wrapped = false;
    int record_every = 1;
    std::vector<double> phi;  // test function on the grid (for ahat)
    std::vector<double> rho;  // wrapping weight (defaults to default_rho)
};

struct Trajectory {
    std::vector<double> t;
    std::vector<std::string> names;
    std::vector<std::vector<double>> series;  // series[k][time index]
    std::vector<WrapEvent> events;
    std::vector<double> final_state;

    const std::vector<double>& operator[](std::string_view name) const;
};

// Height field behind any scheme state (log Z for SHE schemes).
std::vector<double> height_of(Scheme s, std::span<const double> f);
// Tilt field: forward differences of the height, or the state itself for Burgers.
std::vector<double> tilt_field(Scheme s, std::span<const double> f, double dx);

Trajectory simulate(const SimConfig& c, std::vector<double> initial, const ObservableSpec& obs, RngStream& rng);

}  // namespace kpz::spde
