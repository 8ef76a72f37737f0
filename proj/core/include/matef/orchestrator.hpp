#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matef/backend.hpp"
#include "matef/sample_library.hpp"
#include "matef/store.hpp"
#include "matef/tool_adapters.hpp"

namespace matef {

/// Parameters of one Test Run (a single sweep across the guest fleet).
struct TestRunSpec {
    std::string tool_id;
    std::int64_t duration_s = 60;  // presets 10 / 60 / 300 / 600
    int guest_count = 60;
    std::int64_t stagger_s = 10;
    std::uint64_t seed = 0;  // simulated backend only
    int runs_per_group = 3;
};

struct BinaryOutcome {
    bool executed_ok = false;
    std::string failure_reason;
    std::vector<std::byte> log;  // present iff executed_ok
};

struct TestRunResult {
    std::int64_t test_id = 0;
    std::map<std::string, BinaryOutcome> outcomes;  // one entry per in-tray binary
};

/// Three runs over the identical hash list and spec.
struct TestRunGroup {
    std::int64_t group_id = 0;
    TestRunSpec spec;
    std::array<std::int64_t, 3> run_ids{};
    std::vector<std::string> sample;
};

/// Sink for raw tool logs; returns the log_ref recorded with the observation.
using LogSink =
    std::function<std::string(std::int64_t test_id, const std::string& md5,
                              std::span<const std::byte> log)>;

/// Executes one Test Run: per guest, binaries are processed sequentially from
/// its in-tray (revert -> copy_in -> execute_for -> collect_log); guests start
/// at stagger_s offsets. A backend fault on one guest marks that guest's
/// remaining binaries failed and the run continues. Observations are recorded
/// through the store's single writer.
TestRunResult run_test(ArtefactStore& store, const TestRunSpec& spec,
                       const std::vector<InTray>& trays, GuestBackend& backend,
                       const AdapterRegistry& adapters, const std::string& dataset_lineage,
                       const LogSink& log_sink = {});

/// Executes the three runs of a Test Run Group on identical trays. Per-run
/// seeds derive from spec.seed. Lineage: with sample_lineage set (sample drawn
/// by an earlier test) all three runs reference it; otherwise run 1 records
/// "Random" and runs 2-3 reference run 1.
TestRunGroup run_group(ArtefactStore& store, const TestRunSpec& spec,
                       const std::vector<std::string>& sample_hashes, GuestBackend& backend,
                       const AdapterRegistry& adapters,
                       const std::optional<std::int64_t>& sample_lineage = std::nullopt,
                       const LogSink& log_sink = {});

}  // namespace matef
