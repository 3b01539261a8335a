#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "gcb/bounds.hpp"
#include "gcb/engine.hpp"
#include "gcb/estimators.hpp"
#include "gcb/models.hpp"
#include "gcb/observables.hpp"
#include "gcb/rng.hpp"

namespace {

void BM_PhiloxNormals(benchmark::State& state) {
    gcb::NormalStream stream(42, 0);
    gcb::NormalStream::BlockCache cache;
    uint64_t index = 0;
    double sink = 0.0;
    for (auto _ : state) {
        sink += stream.normal(gcb::kChannelNoise, index++, cache);
    }
    benchmark::DoNotOptimize(sink);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxNormals);

void BM_Ou1dPaths(benchmark::State& state) {
    const auto spec = gcb::make_ou_1d(1.0, std::sqrt(2.0));
    const auto grid = gcb::TimeGrid::make(0.0, 1.0, 0.001);
    const double cps[1] = {1.0};
    const long paths = state.range(0);
    for (auto _ : state) {
        auto set = gcb::simulate_ensemble(spec, gcb::InitialLaw::point({1.0}),
                                          grid, paths, 42, cps, 1);
        benchmark::DoNotOptimize(set.checkpoints[0].data.data());
    }
    state.SetItemsProcessed(state.iterations() * paths * grid.n_steps);
}
BENCHMARK(BM_Ou1dPaths)->Arg(100)->Arg(1000);

void BM_GlChainStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto spec = gcb::make_gl_chain(n, [](double x) { return -x; },
                                         [](double x) { return -2.0 * x; },
                                         std::sqrt(2.0), std::sqrt(2.0));
    const auto grid = gcb::TimeGrid::make(0.0, 0.1, 0.01);
    const double cps[1] = {0.1};
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    for (auto _ : state) {
        auto set = gcb::simulate_ensemble(spec, gcb::InitialLaw::point(zero),
                                          grid, 100, 7, cps, 1);
        benchmark::DoNotOptimize(set.checkpoints[0].data.data());
    }
    state.SetItemsProcessed(state.iterations() * 100 * grid.n_steps * n);
}
BENCHMARK(BM_GlChainStep)->Arg(10)->Arg(50);

void BM_LogMgf(benchmark::State& state) {
    const std::vector<double> zero = {0.0};
    const auto ens = gcb::exact_ou_sample(1.0, std::sqrt(2.0), {zero.data(), 1},
                                          20.0, state.range(0), 11);
    const auto f = gcb::make_coordinate_observable(0, 1.0);
    for (auto _ : state) {
        auto est = gcb::empirical_log_mgf(ens, f);
        benchmark::DoNotOptimize(est.value);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogMgf)->Arg(10000)->Arg(100000);

void BM_GcbFamily(benchmark::State& state) {
    const std::vector<double> zero = {0.0};
    const auto ens = gcb::exact_ou_sample(1.0, std::sqrt(2.0), {zero.data(), 1},
                                          20.0, 20000, 11);
    const auto family = gcb::make_default_test_family(1);
    for (auto _ : state) {
        auto est = gcb::empirical_gcb_constant(ens, family);
        benchmark::DoNotOptimize(est.est.value);
    }
}
BENCHMARK(BM_GcbFamily);

void BM_CouplingCurve(benchmark::State& state) {
    const auto curve =
        gcb::coupling_curve(2.0, 1.0, [](double t) { return std::exp(-t); });
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(curve.at(t));
        t = t < 10.0 ? t + 0.01 : 0.0;
    }
}
BENCHMARK(BM_CouplingCurve);

}  // namespace

BENCHMARK_MAIN();
