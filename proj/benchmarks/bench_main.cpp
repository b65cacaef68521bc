// Microbenchmarks for the hot paths: trajectory simulation (both sampling
// modes), the matrix square root used by the coupled diffusion, and the
// scalar limit integrator. Not part of the test suite.

#include <benchmark/benchmark.h>

#include "branchlab/limit_sde.hpp"
#include "branchlab/model.hpp"
#include "branchlab/rng.hpp"
#include "branchlab/simulator.hpp"

namespace {

branchlab::BranchingModel two_cycle() {
    return branchlab::build_model(
        {branchlab::poisson_law({0.0, 1.0}), branchlab::poisson_law({1.0, 0.0})},
        branchlab::poisson_law({1.0, 1.0}), "two_cycle_poisson");
}

void bm_trajectory_superposition(benchmark::State& state) {
    auto m = two_cycle();
    const auto steps = static_cast<std::size_t>(state.range(0));
    std::uint64_t stream = 0;
    for (auto _ : state) {
        auto traj = branchlab::simulate_trajectory(m, steps, 42, stream++,
                                                   branchlab::SamplingMode::superposition);
        benchmark::DoNotOptimize(traj.states.back());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

void bm_trajectory_per_individual(benchmark::State& state) {
    auto m = two_cycle();
    const auto steps = static_cast<std::size_t>(state.range(0));
    std::uint64_t stream = 0;
    for (auto _ : state) {
        auto traj = branchlab::simulate_trajectory(m, steps, 42, stream++,
                                                   branchlab::SamplingMode::per_individual);
        benchmark::DoNotOptimize(traj.states.back());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

void bm_psd_sqrt(benchmark::State& state) {
    const std::size_t p = static_cast<std::size_t>(state.range(0));
    branchlab::Mat a(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) a(i, j) = (i == j) ? 2.0 : 0.5;
    }
    for (auto _ : state) {
        auto b = branchlab::psd_sqrt(a);
        benchmark::DoNotOptimize(b(0, 0));
    }
}

void bm_simulate_Z(benchmark::State& state) {
    std::uint64_t stream = 0;
    for (auto _ : state) {
        branchlab::Rng rng(7, stream++);
        double z = branchlab::simulate_Z_endpoint(1.0, 0.5, 1.0, 1e-3, rng);
        benchmark::DoNotOptimize(z);
    }
}

}  // namespace

BENCHMARK(bm_trajectory_superposition)->Arg(100)->Arg(1000);
BENCHMARK(bm_trajectory_per_individual)->Arg(100)->Arg(1000);
BENCHMARK(bm_psd_sqrt)->Arg(2)->Arg(4)->Arg(8);
BENCHMARK(bm_simulate_Z);

BENCHMARK_MAIN();
