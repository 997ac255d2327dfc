#include <benchmark/benchmark.h>

#include <random>

#include "tdsim/cli/embedded.hpp"
#include "tdsim/cli/run.hpp"
#include "tdsim/dynamics/simulate.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/netmodel/model_io.hpp"
#include "tdsim/numerics/sparse.hpp"
#include "tdsim/powerflow/coupled.hpp"
#include "tdsim/powerflow/fbs.hpp"
#include "tdsim/powerflow/newton.hpp"

using namespace tdsim;

namespace {

const netmodel::Network& model(const char* name) {
    static const netmodel::Network ieee39 = netmodel::parse_network(cli::embedded_file("ieee39"));
    static const netmodel::Network ieee123 = netmodel::parse_network(cli::embedded_file("ieee123"));
    return std::string_view(name) == "ieee39" ? ieee39 : ieee123;
}

const netmodel::Network& hybrid() {
    static const netmodel::Network net = cli::default_hybrid(model("ieee39"), false);
    return net;
}

void BM_SparseLu(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> col(0, n - 1);
    numerics::SparseComplexMatrix a(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (int k = 0; k < 4; ++k) a.add(r, col(rng), numerics::Phasor(u(rng), u(rng)));
        a.add(r, r, numerics::Phasor(8.0, 1.0));
    }
    a.compress();
    std::vector<numerics::Phasor> b(n, numerics::Phasor(1.0, 0.0));
    for (auto _ : state) benchmark::DoNotOptimize(numerics::solve_sparse_complex(a, b));
}
BENCHMARK(BM_SparseLu)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Ieee123Sweep(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(powerflow::solve_distribution_fbs(model("ieee123")));
}
BENCHMARK(BM_Ieee123Sweep)->Unit(benchmark::kMillisecond);

void BM_Ieee39Newton(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(powerflow::solve_transmission_nr(model("ieee39")));
}
BENCHMARK(BM_Ieee39Newton)->Unit(benchmark::kMillisecond);

void BM_BuildHybrid(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(cli::default_hybrid(model("ieee39"), false));
}
BENCHMARK(BM_BuildHybrid)->Unit(benchmark::kMillisecond);

void BM_HybridPowerFlow(benchmark::State& state) {
    powerflow::PowerFlowOptions o;
    o.mode = state.range(0) == 0 ? powerflow::CouplingMode::Unified : powerflow::CouplingMode::Coupled;
    for (auto _ : state) benchmark::DoNotOptimize(powerflow::solve(hybrid(), o));
}
BENCHMARK(BM_HybridPowerFlow)->Arg(0)->Arg(1)->ArgNames({"coupled"})->Unit(benchmark::kSecond)->Iterations(2);

void BM_Ieee39Dynamics(benchmark::State& state) {
    const auto pf = powerflow::solve_transmission_nr(model("ieee39"));
    const auto sys = dynamics::init_dynamics(model("ieee39"), pf);
    dynamics::DynamicScenario sc;
    sc.duration = 1.0;
    sc.probes = {{"d", dynamics::ProbeQuantity::Delta, "G30", 0}};
    for (auto _ : state) benchmark::DoNotOptimize(dynamics::simulate(sys, sc));
}
BENCHMARK(BM_Ieee39Dynamics)->Unit(benchmark::kMillisecond);

void BM_HybridSlg(benchmark::State& state) {
    const auto pf = powerflow::solve(hybrid());
    const auto sys = dynamics::init_dynamics(hybrid(), pf);
    const auto sc = cli::default_scenario();
    for (auto _ : state) benchmark::DoNotOptimize(dynamics::simulate(sys, sc));
}
BENCHMARK(BM_HybridSlg)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
