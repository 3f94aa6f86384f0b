// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fastgate/global_opt.hpp"
#include "fastgate/linear_cost.hpp"
#include "fastgate/ode_dynamics.hpp"
#include "fastgate/reference.hpp"
#include "fastgate/schemes.hpp"
#include "fastgate/trap_model.hpp"
#include "fastgate/units.hpp"

using namespace fastgate;

namespace {

TrapConfiguration paul_trap() { return TrapConfiguration{}; }

std::vector<double> random_vector(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

PulseSequence gpg_sequence(double periods) {
    SchemeParams p;
    p.spec = parse_scheme("gpg:8");
    p.values = {3, -7, 12, -9, 9, -12, 7, -3};
    p.gate_time = periods_to_time(periods);
    return build_sequence(p);
}

void phase_sum_fast(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto z = random_vector(state.range(0), -10, 10, rng);
    const auto t = random_vector(state.range(0), 0, 6, rng);
    for (auto _ : state) benchmark::DoNotOptimize(phase_sum(z, t, 1.0));
}
BENCHMARK(phase_sum_fast)->Arg(64)->Arg(1024);

void phase_sum_reference(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto z = random_vector(state.range(0), -10, 10, rng);
    const auto t = random_vector(state.range(0), 0, 6, rng);
    for (auto _ : state) benchmark::DoNotOptimize(reference::phase_sum(z, t, 1.0));
}
BENCHMARK(phase_sum_reference)->Arg(64)->Arg(1024);

struct BatchFixture {
    FixedTimingCost cost;
    std::vector<std::vector<double>> candidates;
};

BatchFixture batch(int n) {
    const auto trap = paul_trap();
    const auto modes = normal_modes(trap);
    std::mt19937_64 rng(2);
    BatchFixture f{FixedTimingCost(cost_model(trap, modes), scheme_times(parse_scheme("gpg:10"), 1.5)), {}};
    for (int i = 0; i < n; ++i) f.candidates.push_back(random_vector(10, -20, 20, rng));
    return f;
}

void batch_parallel(benchmark::State& state) {
    const auto f = batch(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(f.cost, f.candidates));
}
BENCHMARK(batch_parallel)->Arg(4096);

void batch_serial(benchmark::State& state) {
    const auto f = batch(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::evaluate_batch(f.cost, f.candidates));
}
BENCHMARK(batch_serial)->Arg(4096);

void ode_parallel(benchmark::State& state) {
    const auto trap = paul_trap();
    const auto seq = gpg_sequence(1.0);
    SimulationOptions opt;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_sequence(seq, trap, opt));
}
BENCHMARK(ode_parallel)->Unit(benchmark::kMillisecond);

void ode_serial(benchmark::State& state) {
    const auto trap = paul_trap();
    const auto seq = gpg_sequence(1.0);
    for (auto _ : state) benchmark::DoNotOptimize(reference::simulate_sequence(seq, trap, SimulationOptions{}));
}
BENCHMARK(ode_serial)->Unit(benchmark::kMillisecond);

GlobalSearchConfig small_search() {
    GlobalSearchConfig cfg;
    cfg.scheme = parse_scheme("gpg:6");
    cfg.gate_time = periods_to_time(0.5);
    cfg.stages = 2;
    cfg.restarts = 8;
    cfg.lattice_samples = 200;
    return cfg;
}

void global_parallel(benchmark::State& state) {
    const auto trap = paul_trap();
    const auto modes = normal_modes(trap);
    const auto cfg = small_search();
    for (auto _ : state) benchmark::DoNotOptimize(optimize_global(cfg, trap, modes));
}
BENCHMARK(global_parallel)->Unit(benchmark::kMillisecond);

void global_serial(benchmark::State& state) {
    const auto trap = paul_trap();
    const auto modes = normal_modes(trap);
    const auto cfg = small_search();
    for (auto _ : state) benchmark::DoNotOptimize(reference::optimize_global(cfg, trap, modes));
}
BENCHMARK(global_serial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
