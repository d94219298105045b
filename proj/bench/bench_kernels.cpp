// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "ssr/kernels.hpp"
#include "ssr/rng.hpp"

namespace k = ssr::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    ssr::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <auto Matmul>
void bm_matmul(benchmark::State& state) {
    const std::size_t m = state.range(0), kk = 192, n = 32;
    const auto a = random_values(m * kk, 1), b = random_values(kk * n, 2);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        Matmul(a.data(), b.data(), c.data(), m, kk, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * m);
}

template <auto Ics>
void bm_ics(benchmark::State& state) {
    const std::size_t n = state.range(0), d = 32, T = 5;
    const auto z = random_values(n * d, 3);
    const std::vector<double> alphas(T, 0.1), gamma(d, 1.0);
    std::vector<double> y(n * d), states((T + 1) * n * d), mu(T * n);
    for (auto _ : state) {
        Ics(z.data(), n, d, alphas, gamma.data(), y.data(), k::IcsBuffers{states.data(), mu.data()});
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}

template <auto Norm>
void bm_layer_norm(benchmark::State& state) {
    const std::size_t n = state.range(0), d = 16;
    const auto x = random_values(n * d, 4);
    const std::vector<double> scale(d, 1.0), shift(d, 0.0);
    std::vector<double> y(n * d), xhat(n * d), inv(n);
    for (auto _ : state) {
        Norm(x.data(), n, d, scale.data(), shift.data(), 1e-5, y.data(), xhat.data(), inv.data());
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(bm_matmul<k::reference::matmul>)->Name("matmul/reference")->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_matmul<k::omp::matmul>)->Name("matmul/omp")->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_ics<k::reference::ics_forward>)->Name("ics_forward/reference")->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_ics<k::omp::ics_forward>)->Name("ics_forward/omp")->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_layer_norm<k::reference::layer_norm_forward>)->Name("layer_norm/reference")->Arg(1024)->Arg(4096);
BENCHMARK(bm_layer_norm<k::omp::layer_norm_forward>)->Name("layer_norm/omp")->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
