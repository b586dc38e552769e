#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kpz {

enum class Profile { epanechnikov, triangle, gaussian_truncated, one_sided_epanechnikov };

Profile profile_from_name(std::string_view name);
std::string profile_name(Profile p);

// Unit-scale profile eta(x). The Gaussian is cut at +-4 (not renormalized here).
double profile_value(Profile p, double x);
// Half-width of the unit-scale support; eta vanishes outside [-r, r].
double profile_radius(Profile p);
bool profile_symmetric(Profile p);

// eta^eps(x) = eta(x/eps)/eps evaluated pointwise, with the Gaussian
// truncation renormalized analytically (mass lost beyond 4 sigma).
double scaled_value(Profile p, double eps, double x);

// A kernel sampled on offsets lo..hi of a grid with spacing `step`.
// values[k] is the density at x = (lo + k) * step.
struct MollifierKernel {
    std::vector<double> values;
    int lo = 0;
    int hi = -1;
    double step = 1.0;
    double support_radius = 0.0;
    bool symmetric = true;
    // factor applied so that sum(values) * step == 1
    double normalization = 1.0;

    int size() const { return hi - lo + 1; }
    double at(int offset) const {
        return (offset < lo || offset > hi) ? 0.0 : values[offset - lo];
    }
    double mass() const;
    int half_width() const { return lo < -hi ? -lo : hi; }
};

struct PeriodicGrid {
    double M = 1.0;
    int n = 8;
    PeriodicGrid() = default;
    PeriodicGrid(double period, int points);
    double dx() const { return M / n; }
    double x(int i) const { return i * dx(); }
};

// eta^eps sampled on a grid of spacing `step`, renormalized to unit mass.
MollifierKernel scale_kernel(Profile p, double eps, double step);
// n-fold self convolution (n >= 2) on the same grid.
MollifierKernel self_convolve(const MollifierKernel& k, int n);
// Quadrature of the squared kernel: xi^eps = int (eta^eps)^2.
double xi_epsilon(const MollifierKernel& k);
double xi_epsilon(Profile p, double eps, double step);

// (f * k)(x_i) = sum_j f(x_j) k(x_i - x_j) dx on the torus.
// Direct summation for n < 128, FFT otherwise.
std::vector<double> convolve_periodic(std::span<const double> f, const PeriodicGrid& g,
                                      const MollifierKernel& k);
std::vector<double> convolve_periodic_direct(std::span<const double> f, const PeriodicGrid& g,
                                             const MollifierKernel& k);
std::vector<double> convolve_periodic_fft(std::span<const double> f, const PeriodicGrid& g,
                                          const MollifierKernel& k);

// Compact stencil for hot loops: out[i] = sum_o w[o] in[i - o] (periodic).
// Weights already include the grid step.
class Stencil {
public:
    Stencil() = default;
    Stencil(std::vector<double> weights, int lo);
    static Stencil from_kernel(const MollifierKernel& k);

    void apply(std::span<const double> in, std::span<double> out) const;
    int lo() const { return lo_; }
    int hi() const { return lo_ + static_cast<int>(w_.size()) - 1; }
    double weight(int offset) const {
        int k = offset - lo_;
        return (k < 0 || k >= static_cast<int>(w_.size())) ? 0.0 : w_[k];
    }
    const std::vector<double>& weights() const { return w_; }

private:
    std::vector<double> w_;
    int lo_ = 0;
    bool mirror_ = false;  // w(-o) == w(o) bitwise: taps are paired
};

}  // namespace kpz
