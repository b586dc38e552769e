#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kpz/errors.hpp"
#include "kpz/gaussian_fields.hpp"
#include "kpz/kernels.hpp"

using namespace kpz;

TEST_CASE("scaled kernels have unit mass on the grid") {
    for (Profile p : {Profile::epanechnikov, Profile::triangle, Profile::gaussian_truncated,
                      Profile::one_sided_epanechnikov}) {
        const auto k = scale_kernel(p, 0.1, 0.1 / 37);
        const double m = std::accumulate(k.values.begin(), k.values.end(), 0.0) * k.step;
        CHECK(m == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(k.mass() == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("xi of the Epanechnikov kernel is (3/5)/eps") {
    // int eta^2 = (9/16) int (1 - x^2)^2 = 3/5
    const double eps = 0.2;
    CHECK(xi_epsilon(Profile::epanechnikov, eps, eps / 2000) == doctest::Approx(0.6 / eps).epsilon(1e-5));
}

TEST_CASE("self convolution keeps mass and doubles the support") {
    const auto k = scale_kernel(Profile::epanechnikov, 0.1, 0.01);
    const auto k2 = self_convolve(k, 2);
    CHECK(k2.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k2.hi == 2 * k.hi);
    CHECK(k2.lo == 2 * k.lo);
}

TEST_CASE("direct, FFT and stencil convolutions agree") {
    for (int n : {64, 256}) {
        const PeriodicGrid g(4.0, n);
        RngStream rng(7, n);
        std::vector<double> f(n);
        rng.fill_normal(f);
        for (Profile p : {Profile::epanechnikov, Profile::one_sided_epanechnikov}) {
            const auto k = scale_kernel(p, 0.3, g.dx());
            const auto a = convolve_periodic_direct(f, g, k);
            const auto b = convolve_periodic_fft(f, g, k);
            std::vector<double> c(n);
            Stencil::from_kernel(k).apply(f, c);
            const auto d = convolve_periodic(f, g, k);
            for (int i = 0; i < n; ++i) {
                CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
                CHECK(a[i] == doctest::Approx(c[i]).epsilon(1e-12));
                CHECK(a[i] == doctest::Approx(d[i]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("convolving a constant returns the constant") {
    const PeriodicGrid g(2.0, 128);
    const std::vector<double> f(128, 3.5);
    const auto out = convolve_periodic(f, g, scale_kernel(Profile::triangle, 0.2, g.dx()));
    for (double v : out) CHECK(v == doctest::Approx(3.5).epsilon(1e-13));
}

TEST_CASE("profile names round-trip and unknown names are rejected") {
    for (Profile p : {Profile::epanechnikov, Profile::triangle, Profile::gaussian_truncated,
                      Profile::one_sided_epanechnikov})
        CHECK(profile_from_name(profile_name(p)) == p);
    CHECK_THROWS(profile_from_name("boxcar"));
}

TEST_CASE("profiles are densities with the declared symmetry") {
    CHECK(profile_value(Profile::epanechnikov, 0.0) == doctest::Approx(0.75));
    CHECK(profile_value(Profile::epanechnikov, 1.5) == 0.0);
    CHECK(profile_symmetric(Profile::triangle));
    CHECK_FALSE(profile_symmetric(Profile::one_sided_epanechnikov));
}
