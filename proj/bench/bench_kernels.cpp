#include <benchmark/benchmark.h>

#include <random>

#include "slab/calibration.hpp"
#include "slab/decompose.hpp"
#include "slab/oracle.hpp"
#include "slab/pipeline.hpp"
#include "slab/slabfmt.hpp"

using namespace slab;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void BM_SlabMatvec(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    const auto d = oracle::random_decomposition(rng, n, n, 0.44);
    std::vector<double> x(n, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(slab_matvec(d, x, exec_of(state)));
}

void BM_DenseMatvec(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    const auto w = gaussian_matrix(n, n, rng);
    std::vector<double> x(n, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(oracle::dense_matvec(w, x));
}

void BM_SelectMask(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    const auto s = abs(gaussian_matrix(n, n, rng));
    CompressConfig cfg;
    const auto budget = sparsity_budget(cfg, n, n);
    for (auto _ : state) benchmark::DoNotOptimize(select_mask(s, budget, cfg, exec_of(state)));
}

void BM_Accumulate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    const auto x = gaussian_matrix(256, n, rng);
    ActivationStats stats(n);
    for (auto _ : state) stats.accumulate(x, exec_of(state));
}

void BM_Decompose(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto l = synthetic_layers(5, 1, n, n, 128)[0];
    const auto s_x = column_norms(l.activations);
    CompressConfig cfg;
    cfg.iters = 5;
    for (auto _ : state) benchmark::DoNotOptimize(slab_decompose(l.weight, s_x, cfg, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_SlabMatvec)->ArgsProduct({{256, 1024, 4096}, {0, 1}});
BENCHMARK(BM_DenseMatvec)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_SelectMask)->ArgsProduct({{256, 1024}, {0, 1}});
BENCHMARK(BM_Accumulate)->ArgsProduct({{256, 1024}, {0, 1}});
BENCHMARK(BM_Decompose)->ArgsProduct({{128, 256}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
