#include "kpz/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "kpz/errors.hpp"

namespace kpz {

namespace {

constexpr double kGaussCut = 4.0;

// mass of the standard normal inside [-4, 4]
double gauss_mass() {
    static const double m = std::erf(kGaussCut / std::numbers::sqrt2);
    return m;
}

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Profile profile_from_name(std::string_view name) {
    if (name == "epanechnikov") return Profile::epanechnikov;
    if (name == "triangle") return Profile::triangle;
    if (name == "gaussian-truncated" || name == "gaussian") return Profile::gaussian_truncated;
    if (name == "one-sided-epanechnikov") return Profile::one_sided_epanechnikov;
    throw ConfigError("kernel.name", "unknown kernel '" + std::string(name) + "'");
}

std::string profile_name(Profile p) {
    switch (p) {
        case Profile::epanechnikov: return "epanechnikov";
        case Profile::triangle: return "triangle";
        case Profile::gaussian_truncated: return "gaussian-truncated";
        case Profile::one_sided_epanechnikov: return "one-sided-epanechnikov";
    }
    return "?";
}

double profile_value(Profile p, double x) {
    switch (p) {
        case Profile::epanechnikov:
            return std::abs(x) < 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
        case Profile::triangle:
            return std::abs(x) < 1.0 ? 1.0 - std::abs(x) : 0.0;
        case Profile::gaussian_truncated:
            return std::abs(x) <= kGaussCut
                       ? std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi)
                       : 0.0;
        case Profile::one_sided_epanechnikov:
            // 0.75(1-x^2) folded onto [0,1]
            return (x >= 0.0 && x < 1.0) ? 1.5 * (1.0 - x * x) : 0.0;
    }
    return 0.0;
}

double profile_radius(Profile p) {
    return p == Profile::gaussian_truncated ? kGaussCut : 1.0;
}

bool profile_symmetric(Profile p) { return p != Profile::one_sided_epanechnikov; }

double scaled_value(Profile p, double eps, double x) {
    double v = profile_value(p, x / eps) / eps;
    if (p == Profile::gaussian_truncated) v /= gauss_mass();
    return v;
}

double MollifierKernel::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * step;
}

PeriodicGrid::PeriodicGrid(double period, int points) : M(period), n(points) {
    if (!(period > 0.0)) throw ConfigError("grid.M", "period must be positive");
    if (points < 8) throw ConfigError("grid.nx", "need at least 8 grid points");
}

MollifierKernel scale_kernel(Profile p, double eps, double step) {
    if (!(eps > 0.0)) throw ConfigError("kernel.epsilon", "epsilon must be positive");
    const double R = profile_radius(p) * eps;
    const double diameter = profile_symmetric(p) ? 2.0 * R : R;
    if (diameter / step < 4.0)
        throw UnresolvedKernel("kernel support " + std::to_string(diameter) +
                               " covers fewer than 4 grid steps of " + std::to_string(step));
    MollifierKernel k;
    k.step = step;
    k.support_radius = R;
    k.symmetric = profile_symmetric(p);
    // tiny slack so a support endpoint landing on the grid is included
    const int reach = static_cast<int>(std::floor(R / step + 1e-9));
    k.lo = k.symmetric ? -reach : 0;
    k.hi = reach;
    k.values.resize(k.size());
    for (int o = k.lo; o <= k.hi; ++o) {
        double v = profile_value(p, o * step / eps) / eps;
        k.values[o - k.lo] = v;
    }
    if (k.symmetric) {
        // enforce exact mirror symmetry on the grid
        for (int o = 1; o <= reach; ++o) {
            double m = 0.5 * (k.values[o - k.lo] + k.values[-o - k.lo]);
            k.values[o - k.lo] = m;
            k.values[-o - k.lo] = m;
        }
    }
    const double mass = k.mass();
    k.normalization = 1.0 / mass;
    for (double& v : k.values) v /= mass;
    return k;
}

MollifierKernel self_convolve(const MollifierKernel& k, int n) {
    if (n < 2) throw std::invalid_argument("self_convolve needs n >= 2");
    MollifierKernel acc = k;
    for (int r = 1; r < n; ++r) {
        MollifierKernel next;
        next.step = k.step;
        next.lo = acc.lo + k.lo;
        next.hi = acc.hi + k.hi;
        next.values.assign(next.size(), 0.0);
        for (int a = acc.lo; a <= acc.hi; ++a) {
            const double va = acc.values[a - acc.lo];
            if (va == 0.0) continue;
            for (int b = k.lo; b <= k.hi; ++b)
                next.values[a + b - next.lo] += va * k.values[b - k.lo] * k.step;
        }
        next.symmetric = acc.symmetric && k.symmetric;
        next.support_radius = acc.support_radius + k.support_radius;
        if (next.symmetric) {
            const int reach = next.hi;
            for (int o = 1; o <= reach; ++o) {
                double m = 0.5 * (next.values[o - next.lo] + next.values[-o - next.lo]);
                next.values[o - next.lo] = m;
                next.values[-o - next.lo] = m;
            }
        }
        acc = std::move(next);
    }
    acc.normalization = 1.0;
    return acc;
}

double xi_epsilon(const MollifierKernel& k) {
    double s = 0.0;
    for (double v : k.values) s += v * v;
    return s * k.step;
}

double xi_epsilon(Profile p, double eps, double step) { return xi_epsilon(scale_kernel(p, eps, step)); }

namespace {

void check_width(const PeriodicGrid& g, const MollifierKernel& k) {
    if (2.0 * k.support_radius >= g.M)
        throw KernelTooWide("kernel support " + std::to_string(2.0 * k.support_radius) +
                            " does not fit in period " + std::to_string(g.M));
    if (std::abs(k.step - g.dx()) > 1e-12 * g.dx())
        throw std::invalid_argument("kernel step does not match grid spacing");
}

}  // namespace

std::vector<double> convolve_periodic_direct(std::span<const double> f, const PeriodicGrid& g,
                                             const MollifierKernel& k) {
    check_width(g, k);
    const int n = g.n;
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int o = k.lo; o <= k.hi; ++o) {
            int j = ((i - o) % n + n) % n;
            s += f[j] * k.values[o - k.lo];
        }
        out[i] = s * k.step;
    }
    return out;
}

std::vector<double> convolve_periodic_fft(std::span<const double> f, const PeriodicGrid& g,
                                          const MollifierKernel& k) {
    check_width(g, k);
    const int n = g.n;
    const int nc = n / 2 + 1;
    std::vector<double> a(f.begin(), f.end()), b(n, 0.0);
    for (int o = k.lo; o <= k.hi; ++o) b[((o % n) + n) % n] += k.values[o - k.lo] * k.step;
    std::vector<std::complex<double>> fa(nc), fb(nc);
    fftw_plan pa, pb, pc;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        pa = fftw_plan_dft_r2c_1d(n, a.data(), reinterpret_cast<fftw_complex*>(fa.data()), FFTW_ESTIMATE);
        pb = fftw_plan_dft_r2c_1d(n, b.data(), reinterpret_cast<fftw_complex*>(fb.data()), FFTW_ESTIMATE);
        pc = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(fa.data()), a.data(), FFTW_ESTIMATE);
    }
    fftw_execute(pa);
    fftw_execute(pb);
    for (int i = 0; i < nc; ++i) fa[i] *= fb[i];
    fftw_execute(pc);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);
        fftw_destroy_plan(pc);
    }
    for (double& v : a) v /= n;
    return a;
}

std::vector<double> convolve_periodic(std::span<const double> f, const PeriodicGrid& g,
                                      const MollifierKernel& k) {
    return g.n < 128 ? convolve_periodic_direct(f, g, k) : convolve_periodic_fft(f, g, k);
}

Stencil::Stencil(std::vector<double> weights, int lo) : w_(std::move(weights)), lo_(lo) {
    mirror_ = !w_.empty() && lo_ == -hi();
    for (std::size_t t = 0; mirror_ && t < w_.size(); ++t) mirror_ = w_[t] == w_[w_.size() - 1 - t];
}

Stencil Stencil::from_kernel(const MollifierKernel& k) {
    std::vector<double> w(k.values);
    for (double& v : w) v *= k.step;
    return Stencil(std::move(w), k.lo);
}

void Stencil::apply(std::span<const double> in, std::span<double> out) const {
    const int n = static_cast<int>(in.size());
    const int P = std::max(std::abs(lo()), std::abs(hi()));
    if (2 * P >= n) throw KernelTooWide("stencil wider than the periodic field");
    thread_local std::vector<double> buf;
    buf.resize(n + 2 * P);
    std::copy(in.begin(), in.end(), buf.begin() + P);
    for (int j = 0; j < P; ++j) {
        buf[j] = in[n - P + j];
        buf[n + P + j] = in[j];
    }
    double* o = out.data();
    if (mirror_) {
        const double* c = buf.data() + P;
        const double w0 = w_[-lo_];
        for (int i = 0; i < n; ++i) o[i] = w0 * c[i];
        for (int off = 1; off <= hi(); ++off) {
            const double w = w_[off - lo_];
            for (int i = 0; i < n; ++i) o[i] += w * (c[i - off] + c[i + off]);
        }
        return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t t = 0; t < w_.size(); ++t) {
        const double w = w_[t];
        if (w == 0.0) continue;
        const int off = lo_ + static_cast<int>(t);
        const double* src = buf.data() + P - off;
        for (int i = 0; i < n; ++i) o[i] += w * src[i];
    }
}

}  // namespace kpz
