#include "kpz/spde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kpz/errors.hpp"

namespace kpz::spde {

namespace {

constexpr double kBlowUp = 1e12;

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline int nxt(int i, int n) { return i + 1 < n ? i + 1 : 0; }
inline int prv(int i, int n) { return i > 0 ? i - 1 : n - 1; }

}  // namespace

Scheme scheme_from_name(std::string_view s) {
    if (s == "kpz-smeared-drift") return Scheme::kpz_smeared_drift;
    if (s == "kpz-simple") return Scheme::kpz_simple;
    if (s == "burgers") return Scheme::burgers;
    if (s == "she-coleHopf-smeared") return Scheme::she_cole_hopf_smeared;
    if (s == "she-limit-24") return Scheme::she_limit_24;
    if (s == "she-white") return Scheme::she_white;
    throw ConfigError("sim.scheme", "unknown scheme '" + std::string(s) + "'");
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::kpz_smeared_drift: return "kpz-smeared-drift";
        case Scheme::kpz_simple: return "kpz-simple";
        case Scheme::burgers: return "burgers";
        case Scheme::she_cole_hopf_smeared: return "she-coleHopf-smeared";
        case Scheme::she_limit_24: return "she-limit-24";
        case Scheme::she_white: return "she-white";
    }
    return "?";
}

RenormMode renorm_from_name(std::string_view s) {
    if (s == "xi_eps") return RenormMode::xi_eps;
    if (s == "xi_eps_M") return RenormMode::xi_eps_M;
    if (s == "none") return RenormMode::none;
    throw ConfigError("sim.renorm_mode", "unknown renormalization '" + std::string(s) + "'");
}

std::string renorm_name(RenormMode r) {
    switch (r) {
        case RenormMode::xi_eps: return "xi_eps";
        case RenormMode::xi_eps_M: return "xi_eps_M";
        case RenormMode::none: return "none";
    }
    return "?";
}

bool is_she(Scheme s) {
    return s == Scheme::she_cole_hopf_smeared || s == Scheme::she_limit_24 || s == Scheme::she_white;
}

bool is_smeared(Scheme s) { return s != Scheme::she_limit_24 && s != Scheme::she_white; }

int SimConfig::n_steps() const { return static_cast<int>(std::llround(t_end / step())); }

void validate(const SimConfig& c) {
    if (!(c.M > 0.0)) throw ConfigError("sim.M", "period must be positive, got " + num(c.M));
    if (c.nx < 8) throw ConfigError("sim.nx", "need at least 8 grid points, got " + std::to_string(c.nx));
    if (!(c.t_end >= 0.0)) throw ConfigError("sim.t_end", "must be non-negative");
    const double dx = c.dx();
    if (c.dt < 0.0) throw ConfigError("sim.dt", "must be positive");
    if (c.step() > 0.5 * dx * dx * (1.0 + 1e-12))
        throw ConfigError("sim.dt", "dt = " + num(c.step()) + " exceeds dx^2/2 = " + num(0.5 * dx * dx));
    if (is_smeared(c.scheme)) {
        if (c.eps < 2.0 * dx)
            throw ConfigError("kernel.epsilon", "epsilon = " + num(c.eps) + " is below 2 dx = " + num(2.0 * dx));
        if (2.0 * profile_radius(c.kernel) * c.eps * 2.0 >= c.M)
            throw ConfigError("kernel.epsilon", "eta2 support " + num(4.0 * profile_radius(c.kernel) * c.eps) +
                                                    " does not fit in period M = " + num(c.M));
    }
}

Solver::Solver(const SimConfig& c) : c_(c), g_(c.M, c.nx), dt_(c.step()) {
    validate(c_);
    if (is_smeared(c_.scheme)) {
        eta_ = scale_kernel(c_.kernel, c_.eps, g_.dx());
        eta2_ = self_convolve(eta_, 2);
        eta_st_ = Stencil::from_kernel(eta_);
        eta2_st_ = Stencil::from_kernel(eta2_);
        xi_ = xi_epsilon(eta_);
        switch (c_.renorm) {
            case RenormMode::xi_eps: renorm_ = xi_; break;
            case RenormMode::xi_eps_M: renorm_ = xi_ - 1.0 / c_.M; break;
            case RenormMode::none: renorm_ = 0.0; break;
        }
    }
}

void squared_gradient(std::span<const double> h, double dx, std::span<double> out) {
    const int n = static_cast<int>(h.size());
    const double inv = 1.0 / dx;
    double prev = (h[0] - h[n - 1]) * inv;
    for (int i = 0; i < n; ++i) {
        const double u = (h[nxt(i, n)] - h[i]) * inv;
        out[i] = (u * u + prev * prev + u * prev) / 3.0;
        prev = u;
    }
}

void Solver::step(std::span<double> f, std::span<const double> z, double dt) const {
    const int n = g_.n;
    const double dx = g_.dx();
    const double inv2 = 1.0 / (dx * dx);
    const double nsd = c_.noise_scale * std::sqrt(dt / dx);
    thread_local std::vector<double> zeta, w, a, b, h;
    zeta.resize(n);
    w.resize(n);
    a.resize(n);
    b.resize(n);
    for (int i = 0; i < n; ++i) zeta[i] = nsd * z[i];

    switch (c_.scheme) {
        case Scheme::kpz_smeared_drift:
        case Scheme::kpz_simple: {
            eta_st_.apply(zeta, w);
            squared_gradient(f, dx, a);
            if (c_.scheme == Scheme::kpz_smeared_drift) {
                eta2_st_.apply(a, b);
            } else {
                std::copy(a.begin(), a.end(), b.begin());
            }
            // b holds the (smeared) squared gradient; f is updated in place so
            // the Laplacian is computed first
            for (int i = 0; i < n; ++i) a[i] = 0.5 * (f[nxt(i, n)] + f[prv(i, n)] - 2.0 * f[i]) * inv2;
            for (int i = 0; i < n; ++i) f[i] += dt * (a[i] + 0.5 * (b[i] - renorm_)) + w[i];
            break;
        }
        case Scheme::burgers: {
            eta_st_.apply(zeta, w);
            // S from the tilt field itself
            double prev = f[n - 1];
            for (int i = 0; i < n; ++i) {
                a[i] = (f[i] * f[i] + prev * prev + f[i] * prev) / 3.0;
                prev = f[i];
            }
            eta2_st_.apply(a, b);
            const double inv = 1.0 / dx;
            for (int i = 0; i < n; ++i) {
                const int j = nxt(i, n);
                a[i] = 0.5 * (f[j] + f[prv(i, n)] - 2.0 * f[i]) * inv2 + 0.5 * (b[j] - b[i]) * inv;
                a[i] = dt * a[i] + (w[j] - w[i]) * inv;
            }
            for (int i = 0; i < n; ++i) f[i] += a[i];
            break;
        }
        case Scheme::she_cole_hopf_smeared: {
            eta_st_.apply(zeta, w);
            h.resize(n);
            for (int i = 0; i < n; ++i) h[i] = std::log(f[i]);
            squared_gradient(h, dx, a);
            eta2_st_.apply(a, b);
            // extra Ito term of the transformed renormalization
            const double ito = 0.5 * (xi_ - renorm_);
            for (int i = 0; i < n; ++i) {
                const int p = nxt(i, n), m = prv(i, n);
                const double lapZ = (f[p] + f[m] - 2.0 * f[i]) * inv2;
                const double lapH = (h[p] + h[m] - 2.0 * h[i]) * inv2;
                // discrete (dZ/Z)^2 matching the Laplacian: Lap Z / Z - Lap log Z
                const double D = lapZ / f[i] - lapH;
                a[i] = dt * (0.5 * lapZ + 0.5 * f[i] * (b[i] - D) + ito * f[i]) + f[i] * w[i];
            }
            for (int i = 0; i < n; ++i) f[i] += a[i];
            break;
        }
        case Scheme::she_limit_24:
        case Scheme::she_white: {
            const double c = c_.scheme == Scheme::she_limit_24 ? 1.0 / 24.0 : 0.0;
            for (int i = 0; i < n; ++i)
                a[i] = dt * (0.5 * (f[nxt(i, n)] + f[prv(i, n)] - 2.0 * f[i]) * inv2 + c * f[i]) + f[i] * zeta[i];
            for (int i = 0; i < n; ++i) f[i] += a[i];
            break;
        }
    }
}

void Solver::step(std::span<double> f, RngStream& rng) const {
    thread_local std::vector<double> z;
    z.resize(g_.n);
    rng.fill_normal(z);
    step(f, z, dt_);
}

void Solver::check(std::span<const double> f, double t) const {
    const bool she = is_she(c_.scheme);
    for (double v : f) {
        if (!std::isfinite(v) || std::abs(v) > kBlowUp)
            throw BlowUp("field exceeded 1e12 at t = " + num(t) + "; halve dt", t);
        if (she && v <= 0.0) throw BlowUp("Z lost positivity at t = " + num(t) + "; halve dt", t);
    }
}

std::vector<double> cole_hopf(std::span<const double> h) {
    std::vector<double> Z(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) Z[i] = std::exp(h[i]);
    return Z;
}

std::vector<double> inverse_cole_hopf(std::span<const double> Z) {
    std::vector<double> h(Z.size());
    for (std::size_t i = 0; i < Z.size(); ++i) {
        if (!(Z[i] > 0.0)) throw NonPositiveField("Z(" + std::to_string(i) + ") = " + num(Z[i]) + " is not positive");
        h[i] = std::log(Z[i]);
    }
    return h;
}

std::vector<double> bump_weights(const PeriodicGrid& g, double center, double half_width) {
    std::vector<double> r(g.n, 0.0);
    for (int i = 0; i < g.n; ++i) {
        double d = std::remainder(g.x(i) - center, g.M);
        r[i] = profile_value(Profile::epanechnikov, d / half_width);
    }
    double s = 0.0;
    for (double v : r) s += v;
    s *= g.dx();
    for (double& v : r) v /= s;
    return r;
}

std::vector<double> default_rho(const PeriodicGrid& g) { return bump_weights(g, 0.0, 0.5); }
std::vector<double> default_rho_bar(const PeriodicGrid& g) { return bump_weights(g, 0.5 * g.M, 0.5); }

double average(std::span<const double> f, std::span<const double> rho, double dx) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * rho[i];
    return s * dx;
}

WrappedState wrap(std::span<const double> h, std::span<const double> rho, double dx) {
    WrappedState s;
    const double hr = average(h, rho, dx);
    s.N_count = -static_cast<long>(std::floor(hr));
    s.g.resize(h.size());
    s.Y.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        s.g[i] = h[i] + s.N_count;
        s.Y[i] = std::exp(s.g[i]);
    }
    s.g_rho = hr + s.N_count;
    // guard the half-open interval against rounding
    if (s.g_rho >= 1.0) s.g_rho = std::nextafter(1.0, 0.0);
    if (s.g_rho < 0.0) s.g_rho = 0.0;
    s.Y_rho = std::exp(s.g_rho);
    return s;
}

void advance_wrap(WrappedState& s, std::span<const double> h, std::span<const double> rho, double dx, double t,
                  std::vector<WrapEvent>* log) {
    const long old = s.N_count;
    s = wrap(h, rho, dx);
    if (log && s.N_count != old) {
        // height rising through an integer lowers N: Y_rho jumps from e to 1
        const double c = s.N_count < old ? std::exp(-1.0) - 1.0 : std::numbers::e - 1.0;
        log->push_back({t, old, s.N_count, c});
    }
}

std::vector<double> nonlinear_A(std::span<const double> Y, const PeriodicGrid& g, const MollifierKernel& eta2) {
    const int n = g.n;
    std::vector<double> h(n), S(n), Ss(n), A(n);
    for (int i = 0; i < n; ++i) h[i] = std::log(Y[i]);
    squared_gradient(h, g.dx(), S);
    Stencil::from_kernel(eta2).apply(S, Ss);
    for (int i = 0; i < n; ++i) A[i] = 0.5 * Y[i] * (Ss[i] - S[i]);
    return A;
}

double residual_Ahat(std::span<const double> phi, std::span<const double> Y, const PeriodicGrid& g,
                     const MollifierKernel& eta2) {
    std::vector<double> A = nonlinear_A(Y, g, eta2);
    double s = 0.0;
    for (int i = 0; i < g.n; ++i) s += (A[i] - Y[i] / 24.0) * phi[i];
    return s * g.dx();
}

double support_gap(double a0, double a1, double b0, double b1, double M) {
    // gap between two arcs of the circle of length M
    const double la = a1 - a0, lb = b1 - b0;
    if (la + lb >= M) return -1.0;
    const double ca = 0.5 * (a0 + a1), cb = 0.5 * (b0 + b1);
    const double d = std::abs(std::remainder(ca - cb, M));
    return d - 0.5 * (la + lb);
}

void require_disjoint(double a0, double a1, double b0, double b1, double M) {
    if (support_gap(a0, a1, b0, b1, M) <= 0.0)
        throw OverlappingSupports("supp phi = [" + num(a0) + "," + num(a1) + "] meets supp rho = [" + num(b0) + "," +
                                  num(b1) + "]; the residual test needs disjoint supports");
}

double heat_kernel_pM(double t, double x, double y, double M) {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel needs t > 0");
    const double d = std::remainder(y - x, M);
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
    double s = c * std::exp(-d * d / (2.0 * t));
    for (int k = 1;; ++k) {
        const double a = d + k * M, b = d - k * M;
        const double ta = c * std::exp(-a * a / (2.0 * t));
        const double tb = c * std::exp(-b * b / (2.0 * t));
        s += ta + tb;
        if (ta < 1e-16 && tb < 1e-16) break;
    }
    return s;
}

MildSolver::MildSolver(const PeriodicGrid& g, double dt, bool limit24, double noise_scale)
    : g_(g), dt_(dt), limit24_(limit24), noise_scale_(noise_scale) {
    const int n = g_.n;
    P_.resize(static_cast<std::size_t>(n) * n);
    std::vector<double> row(n);
    for (int k = 0; k < n; ++k) row[k] = heat_kernel_pM(dt_, 0.0, g_.x(k), g_.M) * g_.dx();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P_[static_cast<std::size_t>(i) * n + j] = row[((j - i) % n + n) % n];
}

void MildSolver::step(std::span<double> Z, std::span<const double> z) const {
    const int n = g_.n;
    const double nsd = noise_scale_ * std::sqrt(dt_ / g_.dx());
    const double growth = limit24_ ? std::exp(dt_ / 24.0) : 1.0;
    thread_local std::vector<double> src;
    src.resize(n);
    for (int j = 0; j < n; ++j) src[j] = Z[j] * (1.0 + nsd * z[j]);
    for (int i = 0; i < n; ++i) {
        const double* p = P_.data() + static_cast<std::size_t>(i) * n;
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += p[j] * src[j];
        Z[i] = growth * s;
    }
}

std::vector<double> mild_solve_she(std::span<const double> initial, const PeriodicGrid& g, double T, double dt,
                                   bool limit24, RngStream& rng, double noise_scale) {
    for (double v : initial)
        if (v < 0.0) throw NonPositiveField("mild solver needs non-negative initial data");
    MildSolver ms(g, dt, limit24, noise_scale);
    std::vector<double> Z(initial.begin(), initial.end()), z(g.n);
    const int steps = static_cast<int>(std::llround(T / dt));
    for (int s = 0; s < steps; ++s) {
        rng.fill_normal(z);
        ms.step(Z, z);
        for (double v : Z)
            if (!std::isfinite(v) || std::abs(v) > kBlowUp) throw BlowUp("mild solver blew up", (s + 1) * dt);
    }
    return Z;
}

const std::vector<double>& Trajectory::operator[](std::string_view name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return series[k];
    throw std::out_of_range("no observable " + std::string(name));
}

std::vector<double> height_of(Scheme s, std::span<const double> f) {
    if (s == Scheme::burgers) throw ConfigError("observables", "burgers carries no height field");
    if (is_she(s)) return inverse_cole_hopf(f);
    return {f.begin(), f.end()};
}

std::vector<double> tilt_field(Scheme s, std::span<const double> f, double dx) {
    if (s == Scheme::burgers) return {f.begin(), f.end()};
    std::vector<double> h = height_of(s, f);
    const int n = static_cast<int>(h.size());
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = (h[nxt(i, n)] - h[i]) / dx;
    return u;
}

Trajectory simulate(const SimConfig& c, std::vector<double> f, const ObservableSpec& obs, RngStream& rng) {
    Solver solver(c);
    const PeriodicGrid& g = solver.grid();
    if (static_cast<int>(f.size()) != g.n) throw ConfigError("initial", "initial field has the wrong size");
    if (is_she(c.scheme)) solver.check(f, 0.0);
    const bool need_height = obs.height_avg || obs.ahat || obs.wrapped;
    if (need_height && c.scheme == Scheme::burgers)
        throw ConfigError("observables", "height observables are undefined for burgers");
    if (obs.ahat && !is_smeared(c.scheme)) throw ConfigError("observables", "ahat needs a smeared scheme");
    if (obs.ahat && static_cast<int>(obs.phi.size()) != g.n) throw ConfigError("observables.phi", "phi missing");
    std::vector<double> rho = obs.rho.empty() ? default_rho(g) : obs.rho;

    Trajectory tr;
    if (obs.tilt_moments) {
        tr.names.insert(tr.names.end(), {"u2", "u4", "u_u1"});
    }
    if (obs.height_avg) tr.names.push_back("h_avg");
    if (obs.wrapped) tr.names.insert(tr.names.end(), {"g_rho", "Y_rho"});
    if (obs.ahat) tr.names.insert(tr.names.end(), {"ahat", "a_raw"});
    tr.series.resize(tr.names.size());

    WrappedState ws;
    if (need_height) ws = wrap(height_of(c.scheme, f), rho, g.dx());

    auto record = [&](double t) {
        tr.t.push_back(t);
        std::size_t k = 0;
        if (obs.tilt_moments) {
            std::vector<double> u = tilt_field(c.scheme, f, g.dx());
            double m2 = 0.0, m4 = 0.0, m11 = 0.0;
            for (int i = 0; i < g.n; ++i) {
                m2 += u[i] * u[i];
                m4 += u[i] * u[i] * u[i] * u[i];
                m11 += u[i] * u[nxt(i, g.n)];
            }
            tr.series[k++].push_back(m2 / g.n);
            tr.series[k++].push_back(m4 / g.n);
            tr.series[k++].push_back(m11 / g.n);
        }
        if (obs.height_avg) {
            std::vector<double> h = height_of(c.scheme, f);
            double s = 0.0;
            for (double v : h) s += v;
            tr.series[k++].push_back(s / g.n);
        }
        if (obs.wrapped) {
            tr.series[k++].push_back(ws.g_rho);
            tr.series[k++].push_back(ws.Y_rho);
        }
        if (obs.ahat) {
            const double r = residual_Ahat(obs.phi, ws.Y, g, solver.eta2());
            double y = 0.0;
            for (int i = 0; i < g.n; ++i) y += ws.Y[i] * obs.phi[i];
            tr.series[k++].push_back(r);
            tr.series[k++].push_back(r + y * g.dx() / 24.0);
        }
    };

    record(0.0);
    const int steps = c.n_steps();
    const int every = std::max(1, obs.record_every);
    for (int s = 1; s <= steps; ++s) {
        solver.step(f, rng);
        const double t = s * solver.dt();
        solver.check(f, t);
        if (need_height) advance_wrap(ws, height_of(c.scheme, f), rho, g.dx(), t, &tr.events);
        if (s % every == 0 || s == steps) record(t);
    }
    tr.final_state = std::move(f);
    return tr;
}

}  // namespace kpz::spde
