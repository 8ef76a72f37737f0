#include <benchmark/benchmark.h>

#include "matef/net_sim.hpp"
#include "matef/rng.hpp"

namespace {

std::vector<std::uint8_t> sample_query(matef::Rng& rng) {
    std::vector<std::uint8_t> out = {0x12, 0x34, 0x01, 0x00, 0x00, 0x01,
                                     0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
    for (int label = 0; label < 3; ++label) {
        const int len = 3 + static_cast<int>(rng.bounded(10));
        out.push_back(static_cast<std::uint8_t>(len));
        for (int i = 0; i < len; ++i)
            out.push_back(static_cast<std::uint8_t>('a' + rng.bounded(26)));
    }
    out.insert(out.end(), {0x00, 0x00, 0x01, 0x00, 0x01});
    return out;
}

void DnsAnswer(benchmark::State& state) {
    matef::ServiceConfig cfg;
    matef::Rng rng(1);
    std::vector<std::vector<std::uint8_t>> queries;
    for (int i = 0; i < 256; ++i) queries.push_back(sample_query(rng));
    std::size_t i = 0;
    for (auto _ : state) {
        auto reply = matef::dns_answer(queries[i++ & 255], cfg);
        benchmark::DoNotOptimize(reply);
    }
}
BENCHMARK(DnsAnswer);

}  // namespace
