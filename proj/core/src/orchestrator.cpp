#include "matef/orchestrator.hpp"

#include "matef/errors.hpp"
#include "matef/events.hpp"
#include "matef/rng.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

constexpr std::uint64_t kRunSeedStream = 0x52554e;  // "RUN"

struct GuestOutcomes {
    std::map<std::string, BinaryOutcome> outcomes;
};

GuestOutcomes process_tray(const TestRunSpec& spec, const InTray& tray, GuestBackend& backend,
                           ArtefactStore& store) {
    GuestOutcomes result;
    std::unique_ptr<GuestSession> session;
    std::string fault;
    try {
        session = backend.provision(tray.guest_index);
    } catch (const Error& e) {
        fault = e.what();
    }

    const ToolPackage tool{spec.tool_id};
    for (const auto& md5 : tray.hashes) {
        BinaryOutcome outcome;
        if (!fault.empty()) {
            // Guest is dead: remaining binaries are failures, not omissions.
            outcome.executed_ok = false;
            outcome.failure_reason = "guest fault: " + fault;
            result.outcomes.emplace(md5, std::move(outcome));
            continue;
        }
        try {
            session->revert_to_clean();
            BinaryRef binary;
            binary.md5 = md5;
            if (const auto sample = store.find_sample(md5); sample)
                binary.content = store.sample_content(md5);
            session->copy_in(tool, binary);
            const ExecutionOutcome exec = session->execute_for(spec.duration_s);
            outcome.executed_ok = exec.executed_ok;
            outcome.failure_reason = exec.failure_reason;
            if (exec.executed_ok) outcome.log = session->collect_log();
        } catch (const Error& e) {
            fault = e.what();
            outcome.executed_ok = false;
            outcome.failure_reason = "guest fault: " + fault;
        }
        result.outcomes.emplace(md5, std::move(outcome));
    }
    if (session) {
        try {
            session->shutdown();
        } catch (const Error&) {
            // Shutdown failures do not affect recorded outcomes.
        }
    }
    return result;
}

}  // namespace

TestRunResult run_test(ArtefactStore& store, const TestRunSpec& spec,
                       const std::vector<InTray>& trays, GuestBackend& backend,
                       const AdapterRegistry& adapters, const std::string& dataset_lineage,
                       const LogSink& log_sink) {
    backend.begin_run(spec);

    TestRunResult result;
    result.test_id = store.insert_test(spec.tool_id, spec.duration_s, dataset_lineage,
                                       utc_now_iso8601());

    // Guests are independent sessions; iterating them in index order keeps
    // the run bit-reproducible. Stagger offsets live on the virtual clock.
    store.begin_batch();
    try {
        for (const auto& tray : trays) {
            GuestOutcomes guest = process_tray(spec, tray, backend, store);
            for (auto& [md5, outcome] : guest.outcomes) {
                ObservationRecord rec;
                rec.test_id = result.test_id;
                rec.md5 = md5;
                rec.executed_ok = outcome.executed_ok;
                if (outcome.executed_ok) {
                    const auto parsed =
                        parse_log(adapters, spec.tool_id, outcome.log, md5, /*strict=*/false);
                    rec.counts = count_by_type(parsed.events);
                    if (log_sink) rec.log_ref = log_sink(result.test_id, md5, outcome.log);
                }
                store.record_observation(rec);
                result.outcomes.emplace(md5, std::move(outcome));
            }
        }
    } catch (...) {
        try {
            store.commit_batch();  // keep observations recorded so far
        } catch (...) {
        }
        throw;
    }
    store.commit_batch();
    return result;
}

TestRunGroup run_group(ArtefactStore& store, const TestRunSpec& spec,
                       const std::vector<std::string>& sample_hashes, GuestBackend& backend,
                       const AdapterRegistry& adapters,
                       const std::optional<std::int64_t>& sample_lineage,
                       const LogSink& log_sink) {
    if (sample_hashes.empty()) throw ConfigError("run_group: empty sample");
    const auto trays = partition_in_trays(sample_hashes, spec.guest_count);

    TestRunGroup group;
    group.spec = spec;
    group.sample = sample_hashes;

    for (int run = 0; run < 3; ++run) {
        TestRunSpec run_spec = spec;
        run_spec.seed = mix_seed(spec.seed, mix_seed(kRunSeedStream,
                                                     static_cast<std::uint64_t>(run)));
        std::string lineage;
        if (sample_lineage) {
            lineage = std::to_string(*sample_lineage);
        } else {
            lineage = run == 0 ? "Random" : std::to_string(group.run_ids[0]);
        }
        const TestRunResult result =
            run_test(store, run_spec, trays, backend, adapters, lineage, log_sink);
        group.run_ids[static_cast<std::size_t>(run)] = result.test_id;
    }

    GroupRecord rec;
    rec.tool_id = spec.tool_id;
    rec.duration_s = spec.duration_s;
    rec.guest_count = spec.guest_count;
    rec.stagger_s = spec.stagger_s;
    rec.seed = spec.seed;
    rec.run_ids = group.run_ids;
    rec.sample = sample_hashes;
    rec.created_at = utc_now_iso8601();
    group.group_id = store.insert_group(rec);
    return group;
}

}  // namespace matef
