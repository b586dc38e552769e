#include <benchmark/benchmark.h>

#include <vector>

#include "kpz/chaos.hpp"
#include "kpz/gaussian_fields.hpp"
#include "kpz/harness.hpp"
#include "kpz/kernels.hpp"
#include "kpz/lattice.hpp"
#include "kpz/spde.hpp"

using namespace kpz;

namespace {

std::vector<double> noise(int n) {
    RngStream rng(1, 0);
    std::vector<double> f(n);
    rng.fill_normal(f);
    return f;
}

void BM_ConvolveDirect(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const PeriodicGrid g(4.0, n);
    const auto k = scale_kernel(Profile::epanechnikov, 0.5, g.dx());
    const auto f = noise(n);
    for (auto _ : st) benchmark::DoNotOptimize(convolve_periodic_direct(f, g, k));
}
BENCHMARK(BM_ConvolveDirect)->RangeMultiplier(2)->Range(64, 4096);

void BM_ConvolveFFT(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const PeriodicGrid g(4.0, n);
    const auto k = scale_kernel(Profile::epanechnikov, 0.5, g.dx());
    const auto f = noise(n);
    for (auto _ : st) benchmark::DoNotOptimize(convolve_periodic_fft(f, g, k));
}
BENCHMARK(BM_ConvolveFFT)->RangeMultiplier(2)->Range(64, 4096);

void BM_Stencil(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const PeriodicGrid g(4.0, n);
    const auto s = Stencil::from_kernel(scale_kernel(Profile::epanechnikov, 0.5, g.dx()));
    const auto f = noise(n);
    std::vector<double> out(n);
    for (auto _ : st) {
        s.apply(f, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_Stencil)->RangeMultiplier(2)->Range(64, 4096);

void BM_LatticeStep(benchmark::State& st) {
    const int N = static_cast<int>(st.range(0));
    const lattice::Model m(lattice::continuum_coeffs(N, Profile::epanechnikov, 0.1), N);
    auto h = noise(N);
    RngStream rng(2, 0);
    const double dt = 0.5 * m.max_dt();
    for (auto _ : st) m.step_height(h, dt, rng);
}
BENCHMARK(BM_LatticeStep)->Arg(64)->Arg(256);

void BM_SpdeStep(benchmark::State& st) {
    spde::SimConfig c;
    c.scheme = static_cast<spde::Scheme>(st.range(0));
    const spde::Solver s(c);
    RngStream rng(3, 0);
    auto f = harness::stationary_law(c)(rng);
    for (auto _ : st) s.step(f, rng);
    st.SetLabel(spde::scheme_name(c.scheme));
}
// kpz-smeared-drift, burgers, she-coleHopf-smeared, she-limit-24 at nx = 256
BENCHMARK(BM_SpdeStep)->Arg(0)->Arg(2)->Arg(3)->Arg(4);

void BM_DiagramContract(benchmark::State& st) {
    const chaos::ChaosGrid g{0.0, 1.0, 8};
    RngStream rng(4, 0);
    std::vector<chaos::ChaosKernel> ks{chaos::random_kernel(2, g, rng), chaos::random_kernel(2, g, rng),
                                       chaos::random_kernel(2, g, rng)};
    for (auto _ : st) benchmark::DoNotOptimize(chaos::expected_product(ks));
}
BENCHMARK(BM_DiagramContract);

}  // namespace

BENCHMARK_MAIN();
