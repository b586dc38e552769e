#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "kpz/kernels.hpp"

namespace kpz {

// One independent random stream per (master_seed, stream_index).
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    void fill_normal(std::span<double> out, double sd = 1.0) {
        for (double& v : out) v = sd * normal_(engine_);
    }

    std::uint64_t master_seed() const { return master_; }
    std::uint64_t stream_index() const { return index_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t master_;
    std::uint64_t index_;
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
};

struct FieldSample {
    std::vector<double> x;
    std::vector<double> values;
    std::string law;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

// Grid x_i = i*M/n, i = 0..n (both endpoints included, both exactly 0).
FieldSample sample_pinned_bm(double M, int n, RngStream& rng);
// Grid x_i = (i - n)*dx, i = 0..2n, B(0) = 0; the two branches are independent.
FieldSample sample_two_sided_bm(double half_width, int n_half, RngStream& rng);

// Derivative form on the line: u(x_i) = sum_j eta^eps(x_i - y_j) dB_j over
// points x_i = x0 + i*step, i < n. The noise is generated on the padded range.
FieldSample sample_tilt_nu_eps(const MollifierKernel& eta, double x0, int n, RngStream& rng);
// Torus version for nu^{eps,M}: same with pinned increments; sum(u) dx = 0.
FieldSample sample_tilt_nu_eps_M(const MollifierKernel& eta, const PeriodicGrid& g, RngStream& rng);
// Height form on the torus: h = B^M * eta^eps sampled at x_i; its forward
// differences reproduce sample_tilt_nu_eps_M from the same stream.
FieldSample sample_height_nu_eps_M(const MollifierKernel& eta, const PeriodicGrid& g, RngStream& rng);

// Lattice kernel with symmetric taps alpha(-r..r), stored at alpha[r + i].
struct LatticeKernel {
    std::vector<double> w;
    int radius = 0;
    double operator()(int i) const {
        return (i < -radius || i > radius) ? 0.0 : w[i + radius];
    }
    // K in the sense alpha(i) = 0 for |i| >= K
    int K() const { return radius + 1; }
    static LatticeKernel delta();
    // alpha(i) = eta^eps(i/N)/N, renormalized to sum 1
    static LatticeKernel from_profile(Profile p, double eps, int N);
};

// ũ i.i.d. N(0, 1/lambda), projected to zero sum, u = alpha * ũ.
std::vector<double> sample_gibbs_nu_N(const LatticeKernel& alpha, double lambda, int N, RngStream& rng);

// exp(B(x) + c x + anchor) on the two-sided grid of sample_two_sided_bm.
FieldSample sample_geometric_bm(double c, double anchor, double half_width, int n_half, RngStream& rng);

// Covariance oracles.
double cov_pinned_bm(double x, double y, double M);
double cov_two_sided_bm(double x, double y);
// Covariance of the grid tilt field at lag `lag` grid steps; torus version
// subtracts 1/M.
double cov_nu_eps(const MollifierKernel& eta, int lag);
double cov_nu_eps_M(const MollifierKernel& eta, int lag, double M);

}  // namespace kpz
