#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "matef/backend.hpp"
#include "matef/orchestrator.hpp"
#include "matef/rng.hpp"
#include "matef/store.hpp"
#include "matef/util.hpp"

using namespace matef;
namespace fs = std::filesystem;

namespace {

std::string fake_md5(int i) {
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%032d", i);
    return buf;
}

fs::path temp_db(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("matef_orch_" + tag + "_" +
                                                  std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir / "store.db";
}

std::vector<std::string> sample_of(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(fake_md5(i));
    return out;
}

TestRunSpec spec_for(const std::string& tool, std::int64_t duration, int guests,
                     std::uint64_t seed) {
    TestRunSpec spec;
    spec.tool_id = tool;
    spec.duration_s = duration;
    spec.guest_count = guests;
    spec.stagger_s = 10;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("run_test yields one outcome per in-tray binary") {
    const auto path = temp_db("run");
    ArtefactStore store(path);
    SimModelParams params;
    params.failure_prob = 0;
    params.variability_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();

    const auto sample = sample_of(6);
    const auto trays = partition_in_trays(sample, 3);
    const auto result =
        run_test(store, spec_for("canonical", 60, 3, 7), trays, backend, registry, "Random");

    CHECK(result.outcomes.size() == 6);
    for (const auto& [md5, outcome] : result.outcomes) {
        CHECK(outcome.executed_ok);
        CHECK_FALSE(outcome.log.empty());
    }
    const auto stored = store.observations_for(result.test_id);
    CHECK(stored.size() == 6);
    for (const auto& [md5, rec] : stored) CHECK(rec.executed_ok);
    fs::remove_all(path.parent_path());
}

TEST_CASE("per-binary failures are isolated") {
    const auto path = temp_db("fail");
    ArtefactStore store(path);
    SimModelParams params;
    params.failure_prob = 0.4;
    params.variability_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();

    const auto sample = sample_of(40);
    const auto trays = partition_in_trays(sample, 4);
    const auto result =
        run_test(store, spec_for("canonical", 10, 4, 11), trays, backend, registry, "Random");

    std::size_t failed = 0;
    for (const auto& [md5, outcome] : result.outcomes) {
        // The model alone decides failures (run seed 11 via begin_run).
        CHECK(outcome.executed_ok == !draws_execution_failure(md5, 11, params));
        if (!outcome.executed_ok) {
            ++failed;
            CHECK(outcome.log.empty());
        }
    }
    CHECK(failed > 0);
    CHECK(failed < sample.size());
    // Failed binaries carry all-zero counts.
    for (const auto& [md5, rec] : store.observations_for(result.test_id))
        if (!rec.executed_ok)
            for (ArtefactType t : kAllArtefactTypes) CHECK(rec.counts[t] == 0);
    fs::remove_all(path.parent_path());
}

TEST_CASE("a guest fault fails that guest's remaining binaries, run continues") {
    const auto path = temp_db("guestfault");
    ArtefactStore store(path);
    SimModelParams params;
    params.failure_prob = 0;
    params.variability_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    backend.induce_guest_fault(1, 1);  // guest 1 dies after one binary
    const auto registry = AdapterRegistry::with_canonical();

    const auto sample = sample_of(9);
    const auto trays = partition_in_trays(sample, 3);
    const auto result =
        run_test(store, spec_for("canonical", 10, 3, 3), trays, backend, registry, "Random");

    REQUIRE(result.outcomes.size() == 9);
    // Guest 1 held sample[3..5]; its first binary succeeded, the rest failed.
    CHECK(result.outcomes.at(trays[1].hashes[0]).executed_ok);
    CHECK_FALSE(result.outcomes.at(trays[1].hashes[1]).executed_ok);
    CHECK(result.outcomes.at(trays[1].hashes[1]).failure_reason.find("guest fault") !=
          std::string::npos);
    CHECK_FALSE(result.outcomes.at(trays[1].hashes[2]).executed_ok);
    // Other guests are untouched.
    for (int g : {0, 2})
        for (const auto& md5 : trays[static_cast<std::size_t>(g)].hashes)
            CHECK(result.outcomes.at(md5).executed_ok);
    fs::remove_all(path.parent_path());
}

TEST_CASE("isolation: permuting other guests' trays leaves a binary's log unchanged") {
    const auto path = temp_db("isolation");
    ArtefactStore store(path);
    SimModelParams params;
    params.failure_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();
    const auto spec = spec_for("canonical", 60, 3, 99);

    const auto sample = sample_of(9);
    auto trays = partition_in_trays(sample, 3);
    const auto first =
        run_test(store, spec, trays, backend, registry, "Random");

    std::swap(trays[1].hashes[0], trays[1].hashes[2]);  // permute another guest's tray
    const auto second = run_test(store, spec, trays, backend, registry, "Random");
    for (const auto& md5 : trays[0].hashes)
        CHECK(first.outcomes.at(md5).log == second.outcomes.at(md5).log);
    fs::remove_all(path.parent_path());
}

TEST_CASE("run_group: three runs, identical trays, lineage chain, 18 observations") {
    const auto path = temp_db("group");
    ArtefactStore store(path);
    SimModelParams params;
    params.failure_prob = 0;
    params.variability_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();

    const auto sample = sample_of(6);
    const auto group =
        run_group(store, spec_for("canonical", 60, 3, 42), sample, backend, registry);

    CHECK(group.run_ids[0] < group.run_ids[1]);
    CHECK(group.run_ids[1] < group.run_ids[2]);
    CHECK(group.sample == sample);

    // Lineage: fresh sample -> run 1 "Random", runs 2-3 reference run 1.
    CHECK(store.find_test(group.run_ids[0])->dataset_lineage == "Random");
    CHECK(store.find_test(group.run_ids[1])->dataset_lineage ==
          std::to_string(group.run_ids[0]));
    CHECK(store.find_test(group.run_ids[2])->dataset_lineage ==
          std::to_string(group.run_ids[0]));

    // 3 runs x 6 binaries.
    std::size_t total = 0;
    for (const auto& obs : store.list_group(group.run_ids)) total += obs.size();
    CHECK(total == 18);

    // Reused sample: all three runs reference the originating test.
    const auto group2 = run_group(store, spec_for("canonical", 300, 3, 42), sample, backend,
                                  registry, group.run_ids[0]);
    for (const auto run_id : group2.run_ids)
        CHECK(store.find_test(run_id)->dataset_lineage == std::to_string(group.run_ids[0]));

    // The stored group record round-trips.
    const auto loaded = store.find_group(group.group_id);
    REQUIRE(loaded.has_value());
    CHECK(loaded->run_ids == group.run_ids);
    CHECK(loaded->sample == sample);
    fs::remove_all(path.parent_path());
}

TEST_CASE("group determinism: same seed gives byte-identical logs") {
    SimModelParams params;
    const auto registry = AdapterRegistry::with_canonical();
    const auto sample = sample_of(8);

    auto run_once = [&](const std::string& tag) {
        const auto path = temp_db("det_" + tag);
        ArtefactStore store(path);
        SimulatedBackend backend(params, ToolProfile{});
        std::map<std::string, std::vector<std::byte>> logs;
        LogSink sink = [&](std::int64_t test_id, const std::string& md5,
                           std::span<const std::byte> log) {
            logs[std::to_string(test_id) + "/" + md5] = {log.begin(), log.end()};
            return "mem";
        };
        run_group(store, spec_for("canonical", 60, 2, 1234), sample, backend, registry,
                  std::nullopt, sink);
        fs::remove_all(path.parent_path());
        return logs;
    };
    CHECK(run_once("a") == run_once("b"));
}
