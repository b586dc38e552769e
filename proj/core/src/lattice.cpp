#include "kpz/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "kpz/errors.hpp"

namespace kpz::lattice {

double g1(int i, std::span<const double> h) {
    const int N = static_cast<int>(h.size());
    const double a = h[wrap(i + 1, N)] - h[wrap(i, N)];
    const double b = h[wrap(i, N)] - h[wrap(i - 1, N)];
    return a * a + b * b;
}

double g2(int i, std::span<const double> h) {
    const int N = static_cast<int>(h.size());
    const double a = h[wrap(i + 1, N)] - h[wrap(i, N)];
    const double b = h[wrap(i, N)] - h[wrap(i - 1, N)];
    return a * b;
}

Field laplacian(std::span<const double> h) {
    const int N = static_cast<int>(h.size());
    Field out(N);
    for (int i = 0; i < N; ++i) out[i] = h[wrap(i + 1, N)] + h[wrap(i - 1, N)] - 2.0 * h[i];
    return out;
}

GeneratorCoeffs continuum_coeffs(int N, Profile p, double eps) {
    GeneratorCoeffs c;
    c.l1 = double(N) * N;
    c.l2 = double(N) * N / 6.0;
    c.l3 = std::sqrt(double(N));
    c.alpha = LatticeKernel::from_profile(p, eps, N);
    return c;
}

LatticeKernel self_convolve(const LatticeKernel& a) {
    LatticeKernel r;
    r.radius = 2 * a.radius;
    r.w.assign(2 * r.radius + 1, 0.0);
    for (int i = -a.radius; i <= a.radius; ++i)
        for (int j = -a.radius; j <= a.radius; ++j) r.w[i + j + r.radius] += a(i) * a(j);
    return r;
}

namespace {

// Eigenvalues of the symmetric circulant built from a lattice kernel.
std::vector<double> circulant_eigs(const LatticeKernel& a, int N) {
    std::vector<double> e(N, 0.0);
    for (int k = 0; k < N; ++k) {
        double s = 0.0;
        for (int i = -a.radius; i <= a.radius; ++i)
            s += a(i) * std::cos(2.0 * std::numbers::pi * k * i / N);
        e[k] = s;
    }
    return e;
}

int regularize(std::vector<double>& e) {
    double mx = 0.0;
    for (double v : e) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) throw SingularAlpha("alpha has an identically zero spectrum");
    const double thr = 1e-8 * mx;
    int lifted = 0;
    for (double& v : e) {
        if (std::abs(v) < thr) {
            v = v < 0.0 ? -thr : thr;
            ++lifted;
        }
    }
    return lifted;
}

}  // namespace

Model::Model(GeneratorCoeffs c, int N) : c_(std::move(c)), N_(N) {
    if (N_ <= 2 * c_.alpha.K())
        throw SupportTooWide("N = " + std::to_string(N_) + " must exceed 2K = " + std::to_string(2 * c_.alpha.K()));
    a2_ = self_convolve(c_.alpha);
    alpha_st_ = Stencil(c_.alpha.w, -c_.alpha.radius);
    a2_st_ = Stencil(a2_.w, -a2_.radius);
    eig_alpha_ = circulant_eigs(c_.alpha, N_);
    lifted_ = regularize(eig_alpha_);
    // alpha2's spectrum is the square of alpha's; regularize it on its own
    eig_alpha2_ = circulant_eigs(a2_, N_);
    regularize(eig_alpha2_);
}

void Model::drift_height(std::span<const double> h, std::span<double> out) const {
    const int N = N_;
    thread_local Field d, g, sm;
    d.resize(N + 1);
    g.resize(N);
    sm.resize(N);
    // d[i + 1] = h(i+1) - h(i); d[0] is the wrapped difference into site 0
    d[0] = h[0] - h[N - 1];
    for (int i = 0; i + 1 < N; ++i) d[i + 1] = h[i + 1] - h[i];
    d[N] = d[0];
    for (int i = 0; i < N; ++i) {
        const double a = d[i + 1], b = d[i];
        g[i] = (a * a + b * b) + a * b;
    }
    a2_st_.apply(g, sm);
    const double half = 0.5 * c_.l1;
    for (int i = 0; i < N; ++i) out[i] = half * (d[i + 1] - d[i]) + c_.l2 * sm[i];
}

Field Model::drift_height(std::span<const double> h) const {
    Field out(N_);
    drift_height(h, out);
    return out;
}

void Model::step_height(std::span<double> h, double dt, std::span<const double> xi) const {
    if (!(dt > 0.0) || dt > max_dt() * (1.0 + 1e-12))
        throw UnstableStep("dt = " + std::to_string(dt) + " exceeds 0.25/lambda1 = " + std::to_string(max_dt()));
    thread_local Field d, nz;
    d.resize(N_);
    nz.resize(N_);
    drift_height(h, d);
    alpha_st_.apply(xi, nz);
    const double s = c_.l3 * std::sqrt(dt);
    for (int i = 0; i < N_; ++i) h[i] += d[i] * dt + s * nz[i];
}

void Model::step_height(std::span<double> h, double dt, RngStream& rng) const {
    thread_local Field xi;
    xi.resize(N_);
    rng.fill_normal(xi);
    step_height(h, dt, xi);
}

Field Model::apply_inverse(std::span<const double> f, const std::vector<double>& eig) const {
    const int N = N_;
    std::vector<std::complex<double>> F(N);
    for (int k = 0; k < N; ++k) {
        std::complex<double> s = 0.0;
        for (int j = 0; j < N; ++j) s += f[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * j / N);
        F[k] = s / eig[k];
    }
    Field out(N);
    for (int j = 0; j < N; ++j) {
        std::complex<double> s = 0.0;
        for (int k = 0; k < N; ++k) s += F[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(k) * j / N);
        out[j] = s.real() / N;
    }
    return out;
}

double Model::energy(std::span<const double> h) const {
    Field g = apply_inverse(h, eig_alpha_);
    double s = 0.0;
    for (int j = 0; j < N_; ++j) {
        const double d = g[wrap(j + 1, N_)] - g[j];
        s += d * d;
    }
    return 0.5 * c_.lambda() * s;
}

Field Model::grad_energy(std::span<const double> h) const {
    Field g = apply_inverse(h, eig_alpha_);
    Field lg = laplacian(g);
    Field out = apply_inverse(lg, eig_alpha_);
    for (double& v : out) v *= -c_.lambda();
    return out;
}

Field Model::grad_energy_closed(std::span<const double> h) const {
    Field lh = laplacian(h);
    Field out = apply_inverse(lh, eig_alpha2_);
    for (double& v : out) v *= -c_.lambda();
    return out;
}

std::pair<double, double> check_identity_g1g2(std::span<const double> h) {
    const int N = static_cast<int>(h.size());
    double s = 0.0, scale = 0.0;
    for (int i = 0; i < N; ++i) {
        const double lap = h[wrap(i + 1, N)] + h[wrap(i - 1, N)] - 2.0 * h[i];
        const double t1 = g1(i, h) * lap, t2 = g2(i, h) * lap;
        s += t1 + t2;
        scale += std::abs(t1) + std::abs(t2);
    }
    return {s, scale};
}

DivergenceResidual check_divergence_free(std::span<const double> h, const LatticeKernel& alpha) {
    const int N = static_cast<int>(h.size());
    const LatticeKernel a2 = self_convolve(alpha);
    DivergenceResidual r;
    // d/dh_i (alpha2 * G)(i) = sum_j alpha2(i - j) dG(j)/dh_i, nonzero for j in {i-1, i, i+1}
    for (int i = 0; i < N; ++i) {
        for (int j = i - 1; j <= i + 1; ++j) {
            const int jj = wrap(j, N);
            const double up = h[wrap(jj + 1, N)] - h[jj];
            const double dn = h[jj] - h[wrap(jj - 1, N)];
            double d1 = 0.0, d2 = 0.0;
            if (j == i) {
                d1 = -2.0 * up + 2.0 * dn;  // = -2 Delta h(j)
                d2 = up - dn;               // = Delta h(j)
            } else if (j == i - 1) {
                // h_i is h_{j+1}
                d1 = 2.0 * up;
                d2 = dn;
            } else {
                // h_i is h_{j-1}
                d1 = -2.0 * dn;
                d2 = -up;
            }
            const double w = a2(i - j);
            r.r1 += w * d1;
            r.r2 += w * d2;
            r.scale1 += std::abs(w * d1);
            r.scale2 += std::abs(w * d2);
        }
    }
    return r;
}

DivergenceResidual divergence_fd(std::span<const double> h, const LatticeKernel& alpha, double step) {
    const int N = static_cast<int>(h.size());
    const LatticeKernel a2 = self_convolve(alpha);
    auto field = [&](const Field& x, int i, bool second) {
        double s = 0.0;
        for (int o = -a2.radius; o <= a2.radius; ++o) {
            const int j = wrap(i - o, N);
            s += a2(o) * (second ? g2(j, x) : g1(j, x));
        }
        return s;
    };
    DivergenceResidual r;
    Field x(h.begin(), h.end());
    for (int i = 0; i < N; ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double p1 = field(x, i, false), p2 = field(x, i, true);
        x[i] = keep - step;
        const double m1 = field(x, i, false), m2 = field(x, i, true);
        x[i] = keep;
        const double d1 = (p1 - m1) / (2.0 * step), d2 = (p2 - m2) / (2.0 * step);
        r.r1 += d1;
        r.r2 += d2;
        r.scale1 += std::abs(d1);
        r.scale2 += std::abs(d2);
    }
    return r;
}

Field drift_tilt(std::span<const double> u, int N, const LatticeKernel& alpha) {
    const LatticeKernel a2 = self_convolve(alpha);
    Field q(N), sm(N), out(N);
    for (int i = 0; i < N; ++i) {
        const double a = u[i], b = u[wrap(i - 1, N)];
        q[i] = a * a + b * b + a * b;
    }
    Stencil(a2.w, -a2.radius).apply(q, sm);
    const double n2 = double(N) * N;
    for (int i = 0; i < N; ++i) {
        const double lap = u[wrap(i + 1, N)] + u[wrap(i - 1, N)] - 2.0 * u[i];
        out[i] = 0.5 * n2 * lap + (N / 6.0) * (sm[wrap(i + 1, N)] - sm[i]);
    }
    return out;
}

Field tilt_of(std::span<const double> h) {
    const int N = static_cast<int>(h.size());
    Field u(N);
    for (int i = 0; i < N; ++i) u[i] = N * (h[wrap(i + 1, N)] - h[i]);
    return u;
}

}  // namespace kpz::lattice
