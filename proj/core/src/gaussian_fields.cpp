#include "kpz/gaussian_fields.hpp"

#include <cmath>

#include "kpz/errors.hpp"

namespace kpz {

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_(master_seed), index_(stream_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_index),
                      static_cast<std::uint32_t>(stream_index >> 32), 0x6b707a6cu};
    engine_.seed(seq);
}

FieldSample sample_pinned_bm(double M, int n, RngStream& rng) {
    FieldSample s;
    s.law = "pinned-bm";
    s.seed = rng.master_seed();
    s.stream = rng.stream_index();
    const double dx = M / n;
    s.x.resize(n + 1);
    s.values.resize(n + 1);
    const double sd = std::sqrt(dx);
    double w = 0.0;
    s.values[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
        w += sd * rng.normal();
        s.values[i] = w;
    }
    const double wM = s.values[n];
    for (int i = 0; i <= n; ++i) {
        s.x[i] = i * dx;
        s.values[i] -= (static_cast<double>(i) / n) * wM;
    }
    s.values[n] = 0.0;
    return s;
}

FieldSample sample_two_sided_bm(double half_width, int n_half, RngStream& rng) {
    FieldSample s;
    s.law = "two-sided-bm";
    s.seed = rng.master_seed();
    s.stream = rng.stream_index();
    const double dx = half_width / n_half;
    const double sd = std::sqrt(dx);
    s.x.resize(2 * n_half + 1);
    s.values.assign(2 * n_half + 1, 0.0);
    for (int i = 0; i <= 2 * n_half; ++i) s.x[i] = (i - n_half) * dx;
    double w = 0.0;
    for (int i = n_half + 1; i <= 2 * n_half; ++i) {
        w += sd * rng.normal();
        s.values[i] = w;
    }
    w = 0.0;
    for (int i = n_half - 1; i >= 0; --i) {
        w += sd * rng.normal();
        s.values[i] = w;
    }
    return s;
}

FieldSample sample_tilt_nu_eps(const MollifierKernel& eta, double x0, int n, RngStream& rng) {
    FieldSample s;
    s.law = "nu-eps";
    s.seed = rng.master_seed();
    s.stream = rng.stream_index();
    const double dx = eta.step;
    // noise index j covers x0 + (j - hi)*dx so that i - o stays in range
    const int pad_lo = eta.hi, pad_hi = -eta.lo;
    const int m = n + pad_lo + pad_hi;
    std::vector<double> dB(m);
    rng.fill_normal(dB, std::sqrt(dx));
    s.x.resize(n);
    s.values.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        s.x[i] = x0 + i * dx;
        double acc = 0.0;
        for (int o = eta.lo; o <= eta.hi; ++o) acc += eta.values[o - eta.lo] * dB[i - o + pad_lo];
        s.values[i] = acc;
    }
    return s;
}

namespace {

std::vector<double> pinned_increments(const PeriodicGrid& g, RngStream& rng) {
    std::vector<double> dB(g.n);
    rng.fill_normal(dB, std::sqrt(g.dx()));
    double mean = 0.0;
    for (double v : dB) mean += v;
    mean /= g.n;
    for (double& v : dB) v -= mean;
    return dB;
}

}  // namespace

FieldSample sample_tilt_nu_eps_M(const MollifierKernel& eta, const PeriodicGrid& g, RngStream& rng) {
    FieldSample s;
    s.law = "nu-eps-M";
    s.seed = rng.master_seed();
    s.stream = rng.stream_index();
    std::vector<double> dB = pinned_increments(g, rng);
    // unit weights: u_i = sum_o eta(o) dB_{i-o}
    Stencil st(eta.values, eta.lo);
    s.values.assign(g.n, 0.0);
    st.apply(dB, s.values);
    s.x.resize(g.n);
    for (int i = 0; i < g.n; ++i) s.x[i] = g.x(i);
    return s;
}

FieldSample sample_height_nu_eps_M(const MollifierKernel& eta, const PeriodicGrid& g, RngStream& rng) {
    FieldSample s;
    s.law = "nu-eps-M-height";
    s.seed = rng.master_seed();
    s.stream = rng.stream_index();
    std::vector<double> dB = pinned_increments(g, rng);
    // B^M at grid points, B(0) = 0, with dB_k = B_{k+1} - B_k
    std::vector<double> B(g.n);
    double acc = 0.0;
    for (int k = 0; k < g.n; ++k) {
        B[k] = acc;
        acc += dB[k];
    }
    Stencil st = Stencil::from_kernel(eta);
    s.values.assign(g.n, 0.0);
    st.apply(B, s.values);
    s.x.resize(g.n);
    for (int i = 0; i < g.n; ++i) s.x[i] = g.x(i);
    return s;
}

LatticeKernel LatticeKernel::delta() {
    LatticeKernel a;
    a.w = {1.0};
    a.radius = 0;
    return a;
}

LatticeKernel LatticeKernel::from_profile(Profile p, double eps, int N) {
    if (!profile_symmetric(p)) throw ConfigError("kernel.name", "lattice kernel must be symmetric");
    MollifierKernel k = scale_kernel(p, eps, 1.0 / N);
    LatticeKernel a;
    a.radius = k.hi;
    a.w.resize(k.size());
    for (int o = k.lo; o <= k.hi; ++o) a.w[o - k.lo] = k.values[o - k.lo] / N;
    // drop exact-zero endpoints so that radius is the true reach
    while (a.radius > 0 && a.w.front() == 0.0) {
        a.w.erase(a.w.begin());
        a.w.pop_back();
        --a.radius;
    }
    return a;
}

std::vector<double> sample_gibbs_nu_N(const LatticeKernel& alpha, double lambda, int N, RngStream& rng) {
    if (N <= 2 * alpha.K())
        throw SupportTooWide("N = " + std::to_string(N) + " must exceed 2K = " + std::to_string(2 * alpha.K()));
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    std::vector<double> ut(N);
    rng.fill_normal(ut, 1.0 / std::sqrt(lambda));
    double mean = 0.0;
    for (double v : ut) mean += v;
    mean /= N;
    for (double& v : ut) v -= mean;
    std::vector<double> u(N, 0.0);
    Stencil(alpha.w, -alpha.radius).apply(ut, u);
    return u;
}

FieldSample sample_geometric_bm(double c, double anchor, double half_width, int n_half, RngStream& rng) {
    FieldSample s = sample_two_sided_bm(half_width, n_half, rng);
    s.law = "geometric-bm";
    for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = std::exp(s.values[i] + c * s.x[i] + anchor);
    return s;
}

double cov_pinned_bm(double x, double y, double M) { return std::min(x, y) - x * y / M; }

double cov_two_sided_bm(double x, double y) {
    if (x * y <= 0.0) return 0.0;
    return std::min(std::abs(x), std::abs(y));
}

double cov_nu_eps(const MollifierKernel& eta, int lag) {
    double s = 0.0;
    for (int o = eta.lo; o <= eta.hi; ++o) s += eta.at(o) * eta.at(o + lag);
    return s * eta.step;
}

double cov_nu_eps_M(const MollifierKernel& eta, int lag, double M) {
    const double m = eta.mass();
    return cov_nu_eps(eta, lag) - m * m / M;
}

}  // namespace kpz
