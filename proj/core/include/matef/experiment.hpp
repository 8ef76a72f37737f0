#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "matef/backend.hpp"
#include "matef/manifest.hpp"
#include "matef/orchestrator.hpp"
#include "matef/stats.hpp"
#include "matef/store.hpp"
#include "matef/tool_adapters.hpp"

namespace matef {

/// Builds the adapter registry the manifest describes (canonical plus any
/// configured CSV adapters, each registered under its tool_id).
AdapterRegistry adapters_from_manifest(const ExperimentManifest& manifest);

struct ExperimentRunReport {
    std::vector<std::int64_t> group_ids;  // tools-major, durations-minor
    std::int64_t originating_test_id = 0;
    std::size_t sample_size = 0;
};

/// Executes one Test Run Group per (tool, duration): draws or loads the
/// sample once, then runs every group over the identical hashes. The first
/// test of the experiment records lineage "Random"; every later test
/// references it. Logs are written under output_dir/logs when keep_logs.
ExperimentRunReport run_experiment(ArtefactStore& store, const ExperimentManifest& manifest);

/// Dataset id for the (tool_index, duration_index) group: "A.1", "B.3", ...
std::string dataset_id_for(std::size_t tool_index, std::size_t duration_index);

struct BuiltDataset {
    std::string dataset_id;
    std::size_t rows = 0;
    std::size_t dropped_unknown_to_oracle = 0;
};

/// Builds (and persists) one dataset per stored group using the manifest's
/// combo, exporting CSV + sidecar under output_dir/datasets.
std::vector<BuiltDataset> build_experiment_datasets(ArtefactStore& store,
                                                    const ExperimentManifest& manifest);

struct PlanEntry {
    std::string label;        // "1.1"
    std::string description;  // "Comparing 1 minute to 10 second execution times"
    std::string short_desc;   // "1m vs 10s"
    std::string dataset_a;
    std::string dataset_b;
    stats::Hypothesis hypothesis = stats::Hypothesis::H1;
};

/// H1 pairing plan (per tool): the reference duration against every other
/// duration, in manifest order. Test group g is tool_index+1.
std::vector<PlanEntry> h1_plan(const ExperimentManifest& manifest);
/// H2 pairing plan: the first two tools compared per duration.
std::vector<PlanEntry> h2_plan(const ExperimentManifest& manifest);

struct AnalyzeReport {
    std::vector<stats::AnalysisOutcome> outcomes;
    std::vector<std::filesystem::path> report_files;
};

/// Runs every planned comparison, persists result rows, and writes the
/// pairing plans plus the result tables (CSV and aligned text)
/// under output_dir/reports.
AnalyzeReport analyze_experiment(ArtefactStore& store, const ExperimentManifest& manifest);

/// Renders stored analysis results as the result-table formats.
std::string render_results_csv(std::span<const AnalysisResultRow> rows);
std::string render_results_text(std::span<const AnalysisResultRow> rows);

/// Human-readable duration ("10s", "1m", "5m") used in descriptions.
std::string short_duration(std::int64_t seconds);
std::string long_duration(std::int64_t seconds);  // "10 second", "1 minute"

}  // namespace matef
