#include <benchmark/benchmark.h>

#include "matef/rng.hpp"
#include "matef/stats.hpp"

namespace {

matef::stats::PairedErrors pairs_of(std::size_t n, std::uint64_t seed) {
    matef::Rng rng(seed);
    matef::stats::PairedErrors out;
    for (std::size_t i = 0; i < n; ++i)
        out.rows.push_back({"h" + std::to_string(i), static_cast<double>(rng.bounded(200)),
                            static_cast<double>(rng.bounded(200))});
    return out;
}

void WilcoxonSignedRank(benchmark::State& state) {
    const auto pairs = pairs_of(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        auto result = matef::stats::wilcoxon_signed_rank(pairs);
        benchmark::DoNotOptimize(result);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(WilcoxonSignedRank)->Range(256, 16384)->Complexity();

void ShapiroWilk(benchmark::State& state) {
    matef::Rng rng(5);
    std::vector<double> sample(static_cast<std::size_t>(state.range(0)));
    for (auto& v : sample) v = rng.normal();
    for (auto _ : state) {
        auto result = matef::stats::shapiro_wilk(sample);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(ShapiroWilk)->Arg(50)->Arg(1000)->Arg(5000);

void LillieforsKs(benchmark::State& state) {
    matef::Rng rng(6);
    std::vector<double> sample(static_cast<std::size_t>(state.range(0)));
    for (auto& v : sample) v = rng.normal();
    for (auto _ : state) {
        auto result = matef::stats::ks_normality(sample);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(LillieforsKs)->Arg(50)->Arg(1000);

}  // namespace
