#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kpz/checks.hpp"
#include "kpz/lattice.hpp"

using namespace kpz;

TEST_CASE("the G1+G2 identity holds to rounding") {
    for (int N : {3, 8, 100}) {
        RngStream rng(1, N);
        std::vector<double> h(N);
        rng.fill_normal(h);
        const auto [sum, scale] = lattice::check_identity_g1g2(h);
        CHECK(std::abs(sum) <= 1e-13 * scale);
    }
}

TEST_CASE("analytic divergence matches finite differences and vanishes") {
    const int N = 24;
    const auto alpha = LatticeKernel::from_profile(Profile::epanechnikov, 0.2, N);
    RngStream rng(3, 0);
    std::vector<double> h(N);
    rng.fill_normal(h);
    const auto a = lattice::check_divergence_free(h, alpha);
    const auto f = lattice::divergence_fd(h, alpha, 1e-5);
    CHECK(std::abs(a.r1) <= 1e-12 * a.scale1);
    CHECK(std::abs(a.r2) <= 1e-12 * a.scale2);
    CHECK(std::abs(f.r1) <= 1e-6 * a.scale1);
    CHECK(std::abs(f.r2) <= 1e-6 * a.scale2);
}

TEST_CASE("laplacian annihilates constants and sums to zero") {
    std::vector<double> c(10, 2.0);
    for (double v : lattice::laplacian(c)) CHECK(v == 0.0);
    RngStream rng(2, 0);
    std::vector<double> h(10);
    rng.fill_normal(h);
    const auto l = lattice::laplacian(h);
    CHECK(std::accumulate(l.begin(), l.end(), 0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
}

TEST_CASE("tilt is N times the forward difference") {
    const std::vector<double> h{0.0, 1.0, 3.0, 2.0};
    const auto u = lattice::tilt_of(h);
    CHECK(u[0] == 4.0);
    CHECK(u[1] == 8.0);
    CHECK(u[2] == -4.0);
    CHECK(u[3] == -8.0);
}

TEST_CASE("continuum coefficients") {
    const auto c = lattice::continuum_coeffs(64, Profile::epanechnikov, 0.1);
    CHECK(c.l1 == doctest::Approx(64.0 * 64.0));
    CHECK(c.l2 == doctest::Approx(64.0 * 64.0 / 6.0));
    CHECK(c.l3 == doctest::Approx(8.0));
    CHECK(c.lambda() == doctest::Approx(64.0));
    double s = 0.0;
    for (double w : c.alpha.w) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("energy gradient: chain rule, closed form and finite differences agree") {
    const auto r = checks::gradient_check(16, 20, 1);
    CHECK(r.verdict() == Verdict::pass);
}

TEST_CASE("lattice identities suite passes at small size") {
    const auto r = checks::lattice_identities({4, 16}, 50, 2);
    CHECK(r.verdict() == Verdict::pass);
}

TEST_CASE("a lattice step with zero noise follows the drift") {
    const int N = 16;
    const lattice::Model m(lattice::continuum_coeffs(N, Profile::epanechnikov, 0.25), N);
    RngStream rng(8, 0);
    std::vector<double> h(N);
    rng.fill_normal(h);
    const std::vector<double> zero(N, 0.0);
    const auto d = m.drift_height(h);
    auto h2 = h;
    const double dt = 0.1 * m.max_dt();
    m.step_height(h2, dt, zero);
    for (int i = 0; i < N; ++i) CHECK(h2[i] == doctest::Approx(h[i] + dt * d[i]).epsilon(1e-12));
}
