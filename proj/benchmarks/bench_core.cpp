#include "sidekit/estimate.hpp"
#include "sidekit/matrix.hpp"
#include "sidekit/noise.hpp"
#include "sidekit/simulate.hpp"
#include "sidekit/stability.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace sidekit;

namespace {

LinearSde random_stable(Index n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.5);
    Mat a(n, n);
    Mat g(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            a(i, j) = nd(rng);
            g(i, j) = nd(rng);
        }
    }
    const double gn = g.operatorNorm();
    const double s = a.operatorNorm() + 0.5 * gn * gn + 0.25;
    return LinearSde(a - s * Mat::Identity(n, n), {g});
}

void BM_SolveCtLyapunov(benchmark::State& state)
{
    const LinearSde s = random_stable(state.range(0), 1);
    const SymMat q = SymMat::identity(s.dim());
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_ct_lyapunov(s.f, s.gs, 0.1, q));
    }
}
BENCHMARK(BM_SolveCtLyapunov)->Arg(2)->Arg(4)->Arg(8);

void BM_MaxStepsize(benchmark::State& state)
{
    const LinearSde s = random_stable(state.range(0), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(max_stepsize(s, 1e-9));
    }
}
BENCHMARK(BM_MaxStepsize)->Arg(1)->Arg(3);

void BM_Philox(benchmark::State& state)
{
    const NoisePlan plan(7, 0, 1, 1e-3, 1e3);
    std::uint64_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(plan.standard_normal(Stream::Brownian, 0, k++));
    }
}
BENCHMARK(BM_Philox);

void BM_SimulateCps(benchmark::State& state)
{
    const LinearSde s = random_stable(2, 3);
    const NoisePlan plan(4, 0, 1, 0.05, 5.0);
    CpsOptions opts;
    opts.inner_substeps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_cps(s, Vec::Ones(2), 0.05, 5.0, plan, opts));
    }
}
BENCHMARK(BM_SimulateCps)->Arg(4)->Arg(16);

void BM_ScalarEnsemble(benchmark::State& state)
{
    EnsembleOptions opts;
    opts.dt = 1e-3;
    opts.threads = 1;
    const auto m = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_ensemble(LinearSde::scalar(-1.0, 0.5), Vec::Ones(1), 1.0, m, opts));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_ScalarEnsemble)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_StrongError(benchmark::State& state)
{
    const std::vector<double> dts{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
    StrongErrorOptions opts;
    opts.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(strong_error_sup(LinearSde::scalar(-1.0, 0.5), Vec::Ones(1), 1.0, dts, 200, 5, opts));
    }
}
BENCHMARK(BM_StrongError)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
