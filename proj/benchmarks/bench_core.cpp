#include <benchmark/benchmark.h>

#include <cmath>

#include "sepda/moments.hpp"
#include "sepda/sde.hpp"
#include "sepda/synth.hpp"

namespace {

using namespace sepda;

KernelSpec default_kernel() {
    return KernelSpec{{{1.0 / 3, 0.05}, {1.0 / 3, 0.1}, {1.0 / 3, 0.2}}};
}

State make_state(int n) {
    const Grid g(n, n);
    SyntheticImageSpec spec;
    spec.blobs.push_back({0.45, 0.5, 0.15, 0.9});
    spec.blobs.push_back({0.65, 0.4, 0.1, 0.6});
    ScalarField img = synth_image(spec, g);
    VectorField m(g);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double dx = g.x(i) - 0.5, dy = g.y(j) - 0.5;
            m.x[g.idx(i, j)] = 0.3 * std::exp(-(dx * dx + dy * dy) / 0.02);
        }
    }
    return State(std::move(m), std::move(img), 0.0);
}

NoiseModel hex_model() {
    auto centers = hexagonal_lattice_14();
    auto theta = ground_truth_amplitudes(NoiseFamily::gaussian_lattice, 14);
    return NoiseModel::gaussian(std::move(centers), std::sqrt(0.008), std::move(theta));
}

void BM_Smooth(benchmark::State &bench) {
    const State s = make_state(static_cast<int>(bench.range(0)));
    const KernelSpec spec = default_kernel();
    for (auto _ : bench) {
        benchmark::DoNotOptimize(smooth(spec, s.m));
    }
}
BENCHMARK(BM_Smooth)->Arg(64)->Arg(128);

void BM_Coadjoint(benchmark::State &bench) {
    const State s = make_state(static_cast<int>(bench.range(0)));
    const VectorField u = smooth(default_kernel(), s.m);
    for (auto _ : bench) {
        benchmark::DoNotOptimize(coadjoint(s.m, u));
    }
}
BENCHMARK(BM_Coadjoint)->Arg(64)->Arg(128);

void BM_MomentRhs(benchmark::State &bench) {
    const State s = make_state(static_cast<int>(bench.range(0)));
    const KernelSpec spec = default_kernel();
    const NoiseFieldSet noise = NoiseFieldSet::from_model(hex_model(), s.m.grid);
    const MomentState ms(s.m, s.image, 0.0);
    for (auto _ : bench) {
        benchmark::DoNotOptimize(moment_rhs(ms, noise, spec));
    }
}
BENCHMARK(BM_MomentRhs)->Arg(64)->Arg(128);

void BM_HeunStep(benchmark::State &bench) {
    const State s = make_state(static_cast<int>(bench.range(0)));
    const KernelSpec spec = default_kernel();
    const NoiseFieldSet noise = NoiseFieldSet::from_model(hex_model(), s.m.grid);
    std::vector<double> dw(noise.field_count(), 0.01);
    for (auto _ : bench) {
        benchmark::DoNotOptimize(heun_step(s, noise, spec, 1.0 / 32, dw));
    }
}
BENCHMARK(BM_HeunStep)->Arg(64)->Arg(128);

void BM_MomentEndpoint(benchmark::State &bench) {
    const State s = make_state(64);
    const KernelSpec spec = default_kernel();
    const NoiseFieldSet noise = NoiseFieldSet::from_model(hex_model(), s.m.grid);
    const MomentState ms(s.m, s.image, 0.0);
    for (auto _ : bench) {
        benchmark::DoNotOptimize(integrate_moments(ms, noise, spec, 32));
    }
}
BENCHMARK(BM_MomentEndpoint);

} // namespace

BENCHMARK_MAIN();
