#include <doctest.h>

#include <cmath>

#include "kpz/chaos.hpp"
#include "kpz/errors.hpp"

using namespace kpz;
using namespace kpz::chaos;

TEST_CASE("symmetrize is idempotent and removes the defect") {
    const ChaosGrid g{0.0, 1.0, 5};
    ChaosKernel k(3, g);
    RngStream rng(1, 0);
    for (double& v : k.v) v = rng.normal();
    const auto s = symmetrize(k);
    const auto s2 = symmetrize(s);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s2.v[i] == doctest::Approx(s.v[i]));
    CHECK(symmetry_defect(s, 200, rng) < 1e-12);
    CHECK(symmetry_defect(k, 200, rng) > 1e-3);
}

TEST_CASE("diagram counts agree with the brute-force matching count") {
    for (const std::vector<int>& o : std::vector<std::vector<int>>{{1, 1}, {2, 2}, {1, 1, 2}, {2, 2, 2}, {3, 1, 2}, {2, 3, 1, 2}})
        CHECK(diagram_enumerate(o).size() == diagram_count_bruteforce(o));
    // complete diagrams of (2,2): two perfect matchings across the groups
    int complete = 0;
    for (const auto& d : diagram_enumerate({2, 2})) complete += d.complete();
    CHECK(complete == 2);
    CHECK(diagram_enumerate({1, 1}).size() == 2);
}

TEST_CASE("E[I(f) I(g)] is the inner product") {
    const ChaosGrid g{0.0, 1.0, 16};
    ChaosKernel f(1, g), h(1, g);
    for (int i = 0; i < g.n; ++i) {
        f.v[i] = std::sin(g.u(i));
        h.v[i] = g.u(i);
    }
    std::vector<ChaosKernel> ks{f, h};
    CHECK(expected_product(ks) == doctest::Approx(inner(f, h)));
}

TEST_CASE("second moment of a second-order integral is norm/2") {
    const ChaosGrid g{0.0, 1.0, 6};
    RngStream rng(3, 0);
    const auto k = random_kernel(2, g, rng);
    std::vector<ChaosKernel> ks{k, k};
    CHECK(expected_product(ks) == doctest::Approx(k.norm2() / 2.0));
    CHECK(ito_norm(std::span<const ChaosKernel>(&k, 1)) == doctest::Approx(k.norm2() / 2.0));
}

TEST_CASE("bare kernel norm of Psi matches the quoted closed form") {
    const double eps = 0.2;
    const auto g = ChaosGrid::window(1.6, 400);
    const auto k = psi_eps_kernel(Profile::gaussian_truncated, eps, 0.0, g);
    // kernel carries the factor 2, the quoted constant does not
    CHECK(k.norm2() / 4.0 == doctest::Approx(remark_formula_psi(eps)).epsilon(0.01));
}

TEST_CASE("the J1 quadrature agrees with Monte Carlo") {
    for (RLaw l : {RLaw::gaussian, RLaw::uniform}) {
        const auto e = j1_mc(l, 200000, 5);
        CHECK(std::abs(e.estimate - j1_quadrature(l)) < 4 * e.std_error + 1e-3);
    }
    CHECK(j1_quadrature(RLaw::gaussian) == doctest::Approx(1.0 / 12.0).epsilon(2e-3));
}

TEST_CASE("exponential chaos mean") {
    const Rho r;
    const double a = a_of_x(r, 2.0);
    CHECK(a > 0.0);
    const auto e = mc_exp_chaos(r, 2.0, 20000, 3);
    CHECK(std::abs(e.estimate - std::exp(a)) < 4 * e.std_error);
}

TEST_CASE("phi_x integrates the rho-average against B") {
    const Rho r;
    // right of supp rho nothing is subtracted
    CHECK(phi_x(r, 2.0, 1.0) == doctest::Approx(1.0));
    CHECK(phi_x(r, 2.0, -1.0) == doctest::Approx(0.0));
    CHECK(phi_x(r, 2.0, 0.0) == doctest::Approx(0.5));
    CHECK(r.tail(r.lo()) == doctest::Approx(1.0));
    CHECK(r.tail(r.hi()) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("static B estimate rejects overlapping supports") {
    StaticBConfig c;
    c.phi_lo = -0.2;
    c.phi_hi = 0.3;
    c.samples = 100;
    CHECK_THROWS_AS(static_b_expectation(c), OverlappingSupports);
}

TEST_CASE("pinned projection removes coordinate averages") {
    const ChaosGrid g{0.0, 2.0, 8};
    ChaosKernel k(2, g);
    RngStream rng(2, 0);
    for (double& v : k.v) v = rng.normal();
    const auto p = project_pinned(k);
    for (int i = 0; i < g.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < g.n; ++j) s += p.at2(i, j);
        CHECK(s == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}
