#include <benchmark/benchmark.h>

#include <cstdio>

#include "matef/sim_model.hpp"

namespace {

void SimulateExecution(benchmark::State& state) {
    const matef::SimModelParams params;
    const matef::ToolProfile tool;
    int i = 0;
    for (auto _ : state) {
        char md5[33];
        std::snprintf(md5, sizeof(md5), "%032d", i++ & 1023);
        auto log = matef::simulate_execution(md5, state.range(0), 7, params, tool);
        benchmark::DoNotOptimize(log);
    }
}
BENCHMARK(SimulateExecution)->Arg(10)->Arg(600);

}  // namespace
