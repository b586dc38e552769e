#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kpz/errors.hpp"
#include "kpz/harness.hpp"
#include "kpz/spde.hpp"

using namespace kpz;
using namespace kpz::spde;

TEST_CASE("validation names the offending field") {
    SimConfig c;
    c.dt = 1.0;
    try {
        validate(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "sim.dt");
    }
    c = SimConfig{};
    c.eps = 0.01;  // below 2 dx
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = SimConfig{};
    c.eps = 1.5;  // eta2 does not fit in the period
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK_NOTHROW(validate(SimConfig{}));
}

TEST_CASE("default time step is dx^2/2") {
    SimConfig c;
    CHECK(c.step() == doctest::Approx(0.5 * c.dx() * c.dx()));
}

TEST_CASE("scheme names round-trip") {
    for (Scheme s : {Scheme::kpz_smeared_drift, Scheme::kpz_simple, Scheme::burgers, Scheme::she_cole_hopf_smeared,
                     Scheme::she_limit_24, Scheme::she_white})
        CHECK(scheme_from_name(scheme_name(s)) == s);
    CHECK_THROWS_AS(scheme_from_name("euler"), ConfigError);
}

TEST_CASE("squared gradient combines neighbouring forward differences") {
    const std::vector<double> h{0.0, 1.0, 3.0, 2.0};
    const double dx = 0.5;
    std::vector<double> s(4);
    squared_gradient(h, dx, s);
    for (int i = 0; i < 4; ++i) {
        const double u = (h[(i + 1) % 4] - h[i]) / dx, v = (h[i] - h[(i + 3) % 4]) / dx;
        CHECK(s[i] == doctest::Approx((u * u + v * v + u * v) / 3.0));
    }
}

TEST_CASE("Cole-Hopf round trip") {
    const std::vector<double> h{-1.0, 0.0, 2.5};
    const auto back = inverse_cole_hopf(cole_hopf(h));
    for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(h[i]));
}

TEST_CASE("periodic heat kernel is a probability density") {
    const double M = 3.0;
    const int n = 3000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += heat_kernel_pM(0.2, 0.7, (i + 0.5) * M / n, M) * M / n;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(heat_kernel_pM(0.1, 0.2, 1.0, M) == doctest::Approx(heat_kernel_pM(0.1, 1.0, 0.2, M)));
}

TEST_CASE("support gap on the torus") {
    CHECK(support_gap(0.0, 1.0, 2.0, 3.0, 4.0) == doctest::Approx(1.0));
    CHECK(support_gap(0.0, 1.0, 3.5, 3.8, 4.0) == doctest::Approx(0.2));
    CHECK(support_gap(0.0, 1.0, 0.5, 1.5, 4.0) <= 0.0);
    CHECK_THROWS_AS(require_disjoint(-0.5, 0.5, 0.2, 1.0, 4.0), OverlappingSupports);
}

TEST_CASE("the wrapped average lands in [0,1)") {
    const PeriodicGrid g(4.0, 64);
    const auto rho = default_rho(g);
    std::vector<double> h(64);
    for (int i = 0; i < 64; ++i) h[i] = 3.7 + std::sin(i * 0.1);
    const auto w = wrap(h, rho, g.dx());
    CHECK(w.g_rho >= 0.0);
    CHECK(w.g_rho < 1.0);
    CHECK(average(w.g, rho, g.dx()) == doctest::Approx(w.g_rho));
}

TEST_CASE("noise-free runs are deterministic and conserve the tilt mean") {
    SimConfig c;
    c.nx = 64;
    c.eps = 0.25;
    c.t_end = 0.05;
    c.noise_scale = 0.0;
    c.scheme = Scheme::burgers;
    const auto law = harness::stationary_law(c);
    ObservableSpec obs;
    RngStream r0(1, 0), r1(1, 0), r2(2, 5);
    const auto init = law(r0);
    law(r1);
    const auto a = simulate(c, init, obs, r1);
    const auto b = simulate(c, init, obs, r2);
    CHECK(a.final_state == b.final_state);
    const double m0 = std::accumulate(init.begin(), init.end(), 0.0);
    const double m1 = std::accumulate(a.final_state.begin(), a.final_state.end(), 0.0);
    CHECK(m1 == doctest::Approx(m0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("same seed and stream give identical noisy trajectories") {
    SimConfig c;
    c.nx = 64;
    c.eps = 0.25;
    c.t_end = 0.02;
    const auto law = harness::stationary_law(c);
    ObservableSpec obs;
    RngStream a(3, 7), b(3, 7);
    const auto ta = simulate(c, law(a), obs, a);
    const auto tb = simulate(c, law(b), obs, b);
    CHECK(ta.final_state == tb.final_state);
    CHECK(ta.t == tb.t);
}

TEST_CASE("SHE states stay positive") {
    for (Scheme s : {Scheme::she_cole_hopf_smeared, Scheme::she_limit_24, Scheme::she_white}) {
        SimConfig c;
        c.scheme = s;
        c.nx = 64;
        c.eps = 0.25;
        c.t_end = 0.02;
        const auto law = harness::stationary_law(c);
        RngStream rng(4, 0);
        const auto t = simulate(c, law(rng), ObservableSpec{}, rng);
        for (double z : t.final_state) CHECK(z > 0.0);
    }
}
