#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "matef/backend.hpp"
#include "matef/dataset_builder.hpp"
#include "matef/errors.hpp"
#include "matef/oracle.hpp"
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

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("matef_ds_" + tag + "_" +
                                                  std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ObservationRecord obs(const std::string& md5, bool ok, std::int64_t port_count,
                      std::int64_t file_count = 0) {
    ObservationRecord rec;
    rec.md5 = md5;
    rec.executed_ok = ok;
    if (ok) {
        rec.counts[ArtefactType::Port] = port_count;
        rec.counts[ArtefactType::File] = file_count;
    }
    return rec;
}

using ObsMap = std::map<std::string, ObservationRecord>;

}  // namespace

TEST_CASE("repeatability rule: kept only when executed three times with equal counts") {
    ObsMap run1, run2, run3;
    // (4,4,4) -> kept
    run1["k"] = obs("k", true, 4);
    run2["k"] = obs("k", true, 4);
    run3["k"] = obs("k", true, 4);
    // (4,5,4) -> dropped
    run1["v"] = obs("v", true, 4);
    run2["v"] = obs("v", true, 5);
    run3["v"] = obs("v", true, 4);
    // failed run 2 -> dropped
    run1["f"] = obs("f", true, 4);
    run2["f"] = obs("f", false, 0);
    run3["f"] = obs("f", true, 4);
    // missing from run 3 entirely -> dropped
    run1["m"] = obs("m", true, 1);
    run2["m"] = obs("m", true, 1);

    const std::array<ObsMap, 3> group{run1, run2, run3};
    const auto kept = repeatability_filter(group, TypeCombo::port_only());
    CHECK(kept == std::set<std::string>{"k"});

    SUBCASE("map count other than 3 is rejected") {
        const std::array<ObsMap, 2> two{run1, run2};
        CHECK_THROWS_AS(
            static_cast<void>(repeatability_filter(
                std::span<const ObsMap>(two.data(), two.size()), TypeCombo::port_only())),
            ConfigError);
    }

    SUBCASE("combo scoping: equal on Port but not on File stays kept for PortOnly") {
        run1["c"] = obs("c", true, 2, 9);
        run2["c"] = obs("c", true, 2, 8);
        run3["c"] = obs("c", true, 2, 7);
        const std::array<ObsMap, 3> g2{run1, run2, run3};
        CHECK(repeatability_filter(g2, TypeCombo::port_only()).count("c") == 1);
        CHECK(repeatability_filter(g2, TypeCombo::file_only()).count("c") == 0);
        // The global-across-all-types variant drops it for any combo.
        CHECK(repeatability_filter(g2, TypeCombo::port_only(), RepeatabilityScope::all_types)
                  .count("c") == 0);
    }
}

TEST_CASE("filter is permutation-invariant in the three runs") {
    Rng rng(5150);
    ObsMap run1, run2, run3;
    for (int i = 0; i < 200; ++i) {
        const auto md5 = fake_md5(i);
        run1[md5] = obs(md5, rng.unit() < 0.8, static_cast<std::int64_t>(rng.bounded(4)));
        run2[md5] = obs(md5, rng.unit() < 0.8, static_cast<std::int64_t>(rng.bounded(4)));
        run3[md5] = obs(md5, rng.unit() < 0.8, static_cast<std::int64_t>(rng.bounded(4)));
    }
    const std::array<ObsMap, 3> order1{run1, run2, run3};
    const std::array<ObsMap, 3> order2{run3, run1, run2};
    const std::array<ObsMap, 3> order3{run2, run3, run1};
    const auto kept = repeatability_filter(order1, TypeCombo::port_only());
    CHECK(repeatability_filter(order2, TypeCombo::port_only()) == kept);
    CHECK(repeatability_filter(order3, TypeCombo::port_only()) == kept);
    // Idempotence: filtering the same input twice gives the same set.
    CHECK(repeatability_filter(order1, TypeCombo::port_only()) == kept);
}

TEST_CASE("1000 synthetic binaries with seeded injection equal the brute-force rule") {
    // Independent oracle: re-evaluates the textual rule directly.
    auto brute_force = [](const std::array<ObsMap, 3>& group, TypeCombo combo) {
        std::set<std::string> out;
        std::set<std::string> all;
        for (const auto& m : group)
            for (const auto& [md5, _] : m) all.insert(md5);
        for (const auto& md5 : all) {
            bool ok = true;
            std::vector<std::int64_t> counts;
            for (const auto& m : group) {
                const auto it = m.find(md5);
                if (it == m.end() || !it->second.executed_ok) {
                    ok = false;
                    break;
                }
                counts.push_back(it->second.counts.total(combo));
            }
            if (ok && counts[0] == counts[1] && counts[2] == counts[0]) out.insert(md5);
        }
        return out;
    };

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 1000 + 13);
        std::array<ObsMap, 3> group;
        for (int i = 0; i < 1000; ++i) {
            const auto md5 = fake_md5(i);
            const std::int64_t base = static_cast<std::int64_t>(rng.bounded(10));
            const bool variable = rng.unit() < 0.3;
            for (auto& m : group) {
                const bool failed = rng.unit() < 0.2;
                const std::int64_t jitter =
                    variable ? static_cast<std::int64_t>(rng.bounded(3)) : 0;
                m[md5] = obs(md5, !failed, base + jitter, base);
            }
        }
        CHECK(repeatability_filter(group, TypeCombo::port_only()) ==
              brute_force(group, TypeCombo::port_only()));
    }
}

TEST_CASE("variability and failure at zero retain every binary") {
    const auto dir = temp_dir("degenerate");
    ArtefactStore store(dir / "store.db");
    SimModelParams params;
    params.failure_prob = 0;
    params.variability_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();

    std::vector<std::string> sample;
    for (int i = 0; i < 30; ++i) sample.push_back(fake_md5(i));
    TestRunSpec spec;
    spec.tool_id = "canonical";
    spec.duration_s = 60;
    spec.guest_count = 5;
    spec.seed = 3;
    const auto group = run_group(store, spec, sample, backend, registry);
    const auto kept = repeatability_filter(store.list_group(group.run_ids),
                                           TypeCombo::port_only());
    CHECK(kept.size() == sample.size());
    fs::remove_all(dir);
}

TEST_CASE("build_dataset joins the filter with the oracle and persists") {
    const auto dir = temp_dir("build");
    ArtefactStore store(dir / "store.db");
    SimModelParams params;
    params.failure_prob = 0;
    params.variability_prob = 0;
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();

    std::vector<std::string> sample;
    for (int i = 0; i < 20; ++i) sample.push_back(fake_md5(i));

    // Oracle covers all but the last two binaries.
    for (int i = 0; i < 18; ++i) {
        OracleReport report;
        report.md5 = sample[static_cast<std::size_t>(i)];
        report.source_id = "sim-oracle";
        for (const auto& e : intrinsic_events(report.md5, params))
            report.artefacts[e.type].insert(e.label);
        ingest_report(store, report);
    }

    TestRunSpec spec;
    spec.tool_id = "canonical";
    spec.duration_s = 600;  // beyond saturation: observed == expected
    spec.guest_count = 4;
    spec.seed = 17;
    const auto group = run_group(store, spec, sample, backend, registry);

    const auto result = build_dataset(store, group.group_id, TypeCombo::port_only(),
                                      "sim-oracle", "A.1");
    CHECK(result.repeatable == 20);
    CHECK(result.dropped_unknown_to_oracle == 2);
    REQUIRE(result.rows.size() == 18);
    for (const auto& row : result.rows) CHECK(row.expected == row.observed);

    // Persisted rows match and are md5-ordered.
    const auto stored = store.dataset_rows("A.1");
    CHECK(stored == result.rows);
    CHECK(std::is_sorted(stored.begin(), stored.end(),
                         [](const DatasetRow& a, const DatasetRow& b) { return a.md5 < b.md5; }));

    SUBCASE("export writes CSV plus sidecar and the CSV loads back") {
        const auto csv_path = dir / "A.1.csv";
        export_dataset_files(store, "A.1", csv_path);
        CHECK(load_dataset_csv(csv_path) == stored);
        const auto sidecar = read_file_text((dir / "A.1.meta.json").string());
        CHECK(sidecar.find("\"dataset_id\": \"A.1\"") != std::string::npos);
        CHECK(sidecar.find("\"combo\": \"PortOnly\"") != std::string::npos);
    }

    SUBCASE("at a short duration errors are non-negative and mostly positive") {
        TestRunSpec quick = spec;
        quick.duration_s = 10;
        const auto group10 = run_group(store, quick, sample, backend, registry,
                                       group.run_ids[0]);
        const auto ds10 = build_dataset(store, group10.group_id, TypeCombo::port_only(),
                                        "sim-oracle", "A.4");
        std::int64_t err_total = 0;
        for (const auto& row : ds10.rows) {
            CHECK(row.observed <= row.expected);
            err_total += row.expected - row.observed;
        }
        CHECK(err_total > 0);
    }
    fs::remove_all(dir);
}

TEST_CASE("empty group builds an empty dataset without error") {
    const auto dir = temp_dir("empty");
    ArtefactStore store(dir / "store.db");
    SimModelParams params;
    params.failure_prob = 1.0;  // nothing ever executes
    SimulatedBackend backend(params, ToolProfile{});
    const auto registry = AdapterRegistry::with_canonical();

    std::vector<std::string> sample = {fake_md5(0), fake_md5(1)};
    TestRunSpec spec;
    spec.tool_id = "canonical";
    spec.duration_s = 10;
    spec.guest_count = 1;
    const auto group = run_group(store, spec, sample, backend, registry);
    const auto result =
        build_dataset(store, group.group_id, TypeCombo::port_only(), "sim-oracle", "E.1");
    CHECK(result.rows.empty());
    CHECK(result.repeatable == 0);
    fs::remove_all(dir);
}
