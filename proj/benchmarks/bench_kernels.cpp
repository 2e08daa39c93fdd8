#include <benchmark/benchmark.h>

#include "hplk/spectral.hpp"
#include "hplk/torus.hpp"

using namespace hplk;

static void BM_Xi(benchmark::State& st) {
    const double tol = st.range(0) == 0 ? 1e-8 : 1e-12;
    for (auto _ : st) benchmark::DoNotOptimize(xi(1.0, 0.3, 1.7, tol));
}
BENCHMARK(BM_Xi)->Arg(0)->Arg(1);

static void BM_BoundaryE0(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(boundary_e0(1.5, 1.0, 0.8, Sign::plus));
}
BENCHMARK(BM_BoundaryE0);

static void BM_RotationNumber(benchmark::State& st) {
    const PhysParams p{2.0, 1.3, 4.1};
    for (auto _ : st) benchmark::DoNotOptimize(rotation_number(p, 1e-6));
}
BENCHMARK(BM_RotationNumber);

static void BM_PortraitRow(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(phase_lock_scan(2.0, GridAxis{-6.0, 6.0, 120}, GridAxis{5.0, 5.0, 1}, 1e-6, 1));
}
BENCHMARK(BM_PortraitRow)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
