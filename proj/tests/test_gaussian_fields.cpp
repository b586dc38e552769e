#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kpz/gaussian_fields.hpp"
#include "kpz/lattice.hpp"
#include "kpz/stats.hpp"

using namespace kpz;

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(11, 3), b(11, 3), c(11, 4), d(12, 3);
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
    CHECK(x != d.normal());
}

TEST_CASE("pinned Brownian motion: endpoints and covariance") {
    const double M = 2.0;
    const int n = 16, reps = 20000;
    RunningStats s1, s2;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(5, r);
        const auto f = sample_pinned_bm(M, n, rng);
        REQUIRE(f.values.size() == static_cast<std::size_t>(n + 1));
        CHECK(f.values.front() == 0.0);
        CHECK(f.values.back() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        s1.add(f.values[4] * f.values[4]);
        s2.add(f.values[4] * f.values[12]);
    }
    const double x = 4 * M / n, y = 12 * M / n;
    CHECK(std::abs(s1.mean() - cov_pinned_bm(x, x, M)) < 4 * s1.stderr_of_mean());
    CHECK(std::abs(s2.mean() - cov_pinned_bm(x, y, M)) < 4 * s2.stderr_of_mean());
    CHECK(cov_pinned_bm(x, y, M) == doctest::Approx(x * (M - y) / M));
}

TEST_CASE("two-sided Brownian motion covariance") {
    CHECK(cov_two_sided_bm(1.0, 2.0) == doctest::Approx(1.0));
    CHECK(cov_two_sided_bm(-1.0, 2.0) == 0.0);
    RunningStats s;
    for (int r = 0; r < 20000; ++r) {
        RngStream rng(6, r);
        const auto f = sample_two_sided_bm(1.0, 8, rng);
        CHECK(f.values[8] == 0.0);
        s.add(f.values[0] * f.values[0]);
    }
    CHECK(std::abs(s.mean() - 1.0) < 4 * s.stderr_of_mean());
}

TEST_CASE("torus tilt has zero mean and matches the height differences") {
    const PeriodicGrid g(4.0, 128);
    const auto eta = scale_kernel(Profile::epanechnikov, 0.2, g.dx());
    RngStream a(9, 1), b(9, 1);
    const auto u = sample_tilt_nu_eps_M(eta, g, a);
    const auto h = sample_height_nu_eps_M(eta, g, b);
    CHECK(std::accumulate(u.values.begin(), u.values.end(), 0.0) * g.dx() == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    for (int i = 0; i < g.n; ++i) {
        const double d = (h.values[(i + 1) % g.n] - h.values[i]) / g.dx();
        CHECK(d == doctest::Approx(u.values[i]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("torus tilt variance matches the exact covariance") {
    const PeriodicGrid g(4.0, 64);
    const auto eta = scale_kernel(Profile::epanechnikov, 0.25, g.dx());
    RunningStats s0, s3;
    for (int r = 0; r < 20000; ++r) {
        RngStream rng(4, r);
        const auto u = sample_tilt_nu_eps_M(eta, g, rng);
        s0.add(u.values[10] * u.values[10]);
        s3.add(u.values[10] * u.values[13]);
    }
    CHECK(std::abs(s0.mean() - cov_nu_eps_M(eta, 0, g.M)) < 4 * s0.stderr_of_mean());
    CHECK(std::abs(s3.mean() - cov_nu_eps_M(eta, 3, g.M)) < 4 * s3.stderr_of_mean());
}

TEST_CASE("lattice Gibbs sample sums to zero") {
    const auto co = lattice::continuum_coeffs(32, Profile::epanechnikov, 0.2);
    RngStream rng(2, 0);
    const auto u = sample_gibbs_nu_N(co.alpha, co.lambda(), 32, rng);
    CHECK(std::accumulate(u.begin(), u.end(), 0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("geometric Brownian motion is positive") {
    RngStream rng(1, 0);
    const auto f = sample_geometric_bm(1.0, 0.0, 2.0, 64, rng);
    for (double v : f.values) CHECK(v > 0.0);
    CHECK(f.values[64] == doctest::Approx(1.0));
}
