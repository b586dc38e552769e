#pragma once

#include <span>
#include <utility>
#include <vector>

#include "kpz/gaussian_fields.hpp"

namespace kpz::lattice {

using Field = std::vector<double>;

inline int wrap(int i, int N) { return ((i % N) + N) % N; }

// G1(i) = (h_{i+1}-h_i)^2 + (h_i-h_{i-1})^2, G2(i) = (h_{i+1}-h_i)(h_i-h_{i-1})
double g1(int i, std::span<const double> h);
double g2(int i, std::span<const double> h);
// Delta h(i) = h(i+1) + h(i-1) - 2h(i)
Field laplacian(std::span<const double> h);

struct GeneratorCoeffs {
    double l1 = 1.0, l2 = 0.0, l3 = 1.0;
    LatticeKernel alpha = LatticeKernel::delta();
    double lambda() const { return l1 / (l3 * l3); }
};

// lambda1 = N^2, lambda2 = N^2/6, lambda3 = sqrt(N), alpha(i) = eta^eps(i/N)/N
GeneratorCoeffs continuum_coeffs(int N, Profile p, double eps);

// alpha_2 = alpha * alpha as a lattice kernel
LatticeKernel self_convolve(const LatticeKernel& a);

class Model {
public:
    Model(GeneratorCoeffs c, int N);

    int N() const { return N_; }
    const GeneratorCoeffs& coeffs() const { return c_; }
    const LatticeKernel& alpha2() const { return a2_; }
    double max_dt() const { return 0.25 / c_.l1; }

    // (l1/2) Delta h + l2 {alpha2 * G1 + alpha2 * G2}
    void drift_height(std::span<const double> h, std::span<double> out) const;
    Field drift_height(std::span<const double> h) const;
    // h <- h + drift dt + l3 (alpha * xi) sqrt(dt); xi supplied by the caller
    void step_height(std::span<double> h, double dt, std::span<const double> xi) const;
    void step_height(std::span<double> h, double dt, RngStream& rng) const;

    double energy(std::span<const double> h) const;
    // chain rule through the definition: -lambda alpha^{-1} * Delta (alpha^{-1} * h)
    Field grad_energy(std::span<const double> h) const;
    // closed form -lambda (alpha2^{-1} * Delta h)
    Field grad_energy_closed(std::span<const double> h) const;
    // number of circulant eigenvalues of alpha that were lifted
    int regularized_modes() const { return lifted_; }

private:
    GeneratorCoeffs c_;
    int N_;
    LatticeKernel a2_;
    Stencil alpha_st_, a2_st_;
    std::vector<double> eig_alpha_, eig_alpha2_;
    int lifted_ = 0;

    Field apply_inverse(std::span<const double> f, const std::vector<double>& eig) const;
};

// Sum_i (G1(i) + G2(i)) Delta h(i) together with the scale sum |terms|.
std::pair<double, double> check_identity_g1g2(std::span<const double> h);

struct DivergenceResidual {
    double r1 = 0.0, r2 = 0.0;      // raw sums for l = 1, 2
    double scale1 = 0.0, scale2 = 0.0;  // sums of |terms|
};
// Sum_i d/dh_i (alpha2 * G_l)(i) from the analytic partial derivatives.
DivergenceResidual check_divergence_free(std::span<const double> h, const LatticeKernel& alpha);
// Same quantity by central finite differences of the vector field (oracle).
DivergenceResidual divergence_fd(std::span<const double> h, const LatticeKernel& alpha, double step);

// (1/2) Delta_N u + (1/6) grad_N [alpha2 * {u^2 + u(.-1)^2 + u u(.-1)}]
Field drift_tilt(std::span<const double> u, int N, const LatticeKernel& alpha);
// u(i) = N (h(i+1) - h(i))
Field tilt_of(std::span<const double> h);

}  // namespace kpz::lattice
