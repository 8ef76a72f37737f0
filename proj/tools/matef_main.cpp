// matef: command-line runner for the malware-analysis tool evaluation harness.
//
// Subcommands: ingest, oracle-import, run, build-dataset, analyze, report,
// synth-corpus. Exit codes: 0 success, 2 configuration/input error, 3 store
// error, 4 backend error, 5 analysis error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "matef/corpus.hpp"
#include "matef/dataset_builder.hpp"
#include "matef/errors.hpp"
#include "matef/experiment.hpp"
#include "matef/manifest.hpp"
#include "matef/oracle.hpp"
#include "matef/sample_library.hpp"
#include "matef/store.hpp"
#include "matef/util.hpp"

namespace fs = std::filesystem;
using namespace matef;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStore = 3;
constexpr int kExitBackend = 4;
constexpr int kExitAnalysis = 5;

struct GlobalOptions {
    std::string store_path;
    std::string manifest_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool strict = false;
};

fs::path resolve_store(const GlobalOptions& global, const ExperimentManifest* manifest) {
    if (!global.store_path.empty()) return global.store_path;
    if (manifest && !manifest->store_path.empty()) return manifest->store_path;
    if (const char* env = std::getenv("MATEF_STORE"); env && *env) return env;
    throw ConfigError("no store path: pass --store, set MATEF_STORE, or use a manifest");
}

ExperimentManifest manifest_with_overrides(const GlobalOptions& global) {
    if (global.manifest_path.empty()) throw ConfigError("this subcommand needs --manifest");
    ExperimentManifest manifest = load_manifest(global.manifest_path);
    if (global.seed_set) manifest.seed = global.seed;
    if (!global.store_path.empty()) manifest.store_path = global.store_path;
    return manifest;
}

void copy_provenance(const ExperimentManifest& manifest, const GlobalOptions& global) {
    // Everything needed to rerun lands next to the outputs.
    std::error_code ec;
    fs::create_directories(manifest.output_dir, ec);
    if (!global.manifest_path.empty())
        fs::copy_file(global.manifest_path, manifest.output_dir / "manifest.used",
                      fs::copy_options::overwrite_existing, ec);
    std::ofstream meta(manifest.output_dir / "provenance.txt");
    meta << "matef_version=0.1.0\n"
         << "name=" << manifest.name << "\n"
         << "seed=" << manifest.seed << "\n"
         << "store=" << manifest.store_path.string() << "\n"
         << "combo=" << manifest.combo.to_string() << "\n";
}

int cmd_ingest(const GlobalOptions& global, const std::string& dir,
               const std::string& sidecar, const std::string& source_tag,
               const std::vector<std::string>& tags) {
    ArtefactStore store(resolve_store(global, nullptr));
    SampleLibrary library(store);
    std::optional<fs::path> sidecar_path;
    if (!sidecar.empty()) sidecar_path = sidecar;
    const std::set<std::string> tag_set(tags.begin(), tags.end());
    const IngestSummary summary =
        ingest_directory(library, dir, sidecar_path, source_tag, tag_set);

    std::cout << "ingested " << summary.ingested << " new, " << summary.duplicates
              << " duplicate, " << summary.skipped << " skipped\n";
    for (const auto& [tag, count] : summary.per_tag)
        std::cout << "  tag " << tag << ": " << count << "\n";
    for (const auto& problem : summary.problems) std::cerr << "  skipped: " << problem << "\n";
    return kExitOk;
}

int cmd_oracle_import(const GlobalOptions& global, const std::vector<std::string>& paths,
                      const std::string& source) {
    ArtefactStore store(resolve_store(global, nullptr));
    OracleParseOptions opts;
    opts.strict = global.strict;

    std::vector<fs::path> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file()) files.push_back(entry.path());
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());

    std::size_t stored = 0, malformed = 0, unchanged = 0;
    for (const auto& file : files) {
        try {
            const std::string text = read_file_text(file.string());
            OracleParseResult parsed;
            if (file.extension() == ".csv") {
                parsed = parse_oracle_csv(text, source.empty() ? "csv" : source, opts);
            } else {
                parsed = parse_oracle_xml(text, opts);
                if (!source.empty())
                    for (auto& report : parsed.reports) report.source_id = source;
            }
            for (const auto& skipped : parsed.skipped_tags)
                std::cerr << file.filename().string() << ": skipped unknown type '" << skipped
                          << "'\n";
            for (const auto& report : parsed.reports)
                ingest_report(store, report) ? ++stored : ++unchanged;
        } catch (const ParseError& e) {
            if (global.strict) throw;
            ++malformed;
            std::cerr << file.filename().string() << ": " << e.what() << "\n";
        }
    }
    std::cout << "stored " << stored << " report(s), " << unchanged << " unchanged, " << malformed
              << " malformed\n";
    return kExitOk;
}

int cmd_run(const GlobalOptions& global) {
    const ExperimentManifest manifest = manifest_with_overrides(global);
    ArtefactStore store(manifest.store_path);
    copy_provenance(manifest, global);
    const ExperimentRunReport report = run_experiment(store, manifest);
    std::cout << "experiment '" << manifest.name << "': " << report.group_ids.size()
              << " group(s), " << report.group_ids.size() * 3 << " test run(s) over "
              << report.sample_size << " binaries\n";
    std::cout << "originating test: " << report.originating_test_id << "\n";
    return kExitOk;
}

int cmd_build_dataset(const GlobalOptions& global) {
    const ExperimentManifest manifest = manifest_with_overrides(global);
    ArtefactStore store(manifest.store_path);
    for (const auto& built : build_experiment_datasets(store, manifest)) {
        std::cout << "dataset " << built.dataset_id << ": " << built.rows << " rows";
        if (built.dropped_unknown_to_oracle > 0)
            std::cout << " (" << built.dropped_unknown_to_oracle << " unknown to oracle)";
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_analyze(const GlobalOptions& global, const std::vector<std::string>& spec_files) {
    if (!spec_files.empty()) {
        // Standalone analysis-spec files against an existing store.
        ExperimentManifest manifest;
        const ExperimentManifest* manifest_ptr = nullptr;
        if (!global.manifest_path.empty()) {
            manifest = load_manifest(global.manifest_path);
            manifest_ptr = &manifest;
        }
        ArtefactStore store(resolve_store(global, manifest_ptr));
        for (const auto& file : spec_files) {
            const auto spec = load_analysis_spec(file);
            const auto outcome = stats::run_analysis(store, spec);
            std::cout << (spec.label.empty() ? file : spec.label) << ": T="
                      << outcome.wilcoxon.T << " p=" << outcome.wilcoxon.p;
            if (outcome.wilcoxon.exact_p)
                std::cout << " exact_p=" << *outcome.wilcoxon.exact_p;
            std::cout << " -> " << stats::to_string(outcome.wilcoxon.decision) << "\n";
        }
        return kExitOk;
    }
    const ExperimentManifest manifest = manifest_with_overrides(global);
    ArtefactStore store(manifest.store_path);
    const AnalyzeReport report = analyze_experiment(store, manifest);
    for (const auto& outcome : report.outcomes) {
        std::cout << outcome.spec.label << " (" << outcome.spec.description
                  << "): p=" << outcome.wilcoxon.p;
        if (outcome.wilcoxon.exact_p) std::cout << " exact_p=" << *outcome.wilcoxon.exact_p;
        std::cout << " -> " << stats::to_string(outcome.wilcoxon.decision) << "\n";
    }
    std::cout << "report files under "
              << (manifest.output_dir / "reports").lexically_normal().string() << "\n";
    return kExitOk;
}

int cmd_report(const GlobalOptions& global, const std::string& library_csv,
               const std::string& results_csv, std::int64_t observations_test,
               const std::string& observations_csv, const std::string& dataset_id,
               const std::string& dataset_csv) {
    ExperimentManifest manifest;
    const ExperimentManifest* manifest_ptr = nullptr;
    if (!global.manifest_path.empty()) {
        manifest = load_manifest(global.manifest_path);
        manifest_ptr = &manifest;
    }
    ArtefactStore store(resolve_store(global, manifest_ptr), ArtefactStore::Mode::read_only);

    bool did_something = false;
    if (!library_csv.empty()) {
        std::ofstream out(library_csv);
        store.export_library_csv(out);
        std::cout << "library listing -> " << library_csv << "\n";
        did_something = true;
    }
    if (observations_test > 0) {
        if (observations_csv.empty())
            throw ConfigError("--observations needs --observations-out");
        std::ofstream out(observations_csv);
        store.export_observations_csv(observations_test, out);
        std::cout << "observations for test " << observations_test << " -> " << observations_csv
                  << "\n";
        did_something = true;
    }
    if (!dataset_id.empty()) {
        if (dataset_csv.empty()) throw ConfigError("--dataset needs --dataset-out");
        std::ofstream out(dataset_csv);
        store.export_dataset_csv(dataset_id, out);
        std::cout << "dataset " << dataset_id << " -> " << dataset_csv << "\n";
        did_something = true;
    }
    if (!results_csv.empty()) {
        write_file_text(results_csv, render_results_csv(store.list_analysis_results()));
        std::cout << "results -> " << results_csv << "\n";
        did_something = true;
    }
    if (!did_something) {
        const auto rows = store.list_analysis_results();
        if (rows.empty())
            std::cout << "no analysis results stored\n";
        else
            std::cout << render_results_text(rows);
    }
    return kExitOk;
}

int cmd_synth_corpus(const GlobalOptions& global, const std::string& out_dir, std::size_t count,
                     std::uint64_t seed, bool seed_given) {
    CorpusSpec spec;
    spec.count = count;
    if (!global.manifest_path.empty()) {
        const ExperimentManifest manifest = load_manifest(global.manifest_path);
        spec.model = manifest.model;
    }
    if (seed_given) spec.seed = seed;
    else if (global.seed_set) spec.seed = global.seed;
    const CorpusPaths paths = generate_corpus(out_dir, spec);
    std::cout << "synthetic corpus: " << spec.count << " binaries in "
              << paths.binaries_dir.string() << ", oracle XML in " << paths.oracle_dir.string()
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MATEF: timed malware-tool evaluation harness"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--store", global.store_path, "artefact store path (or $MATEF_STORE)");
    app.add_option("--manifest", global.manifest_path, "experiment manifest file");
    app.add_option("--seed", global.seed, "seed override")->each([&](const std::string&) {
        global.seed_set = true;
    });
    app.add_flag("--strict", global.strict, "fail on the first malformed document");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "ingest a directory of binaries");
    std::string ingest_dir, sidecar, source_tag = "local";
    std::vector<std::string> tags;
    ingest->add_option("dir", ingest_dir, "directory of candidate binaries")->required();
    ingest->add_option("--sidecar", sidecar,
                       "sidecar CSV (filename,source_tag,tags); defaults to <dir>/manifest.csv");
    ingest->add_option("--source-tag", source_tag, "default source tag");
    ingest->add_option("--tag", tags, "default capability tag (repeatable)");

    // oracle-import
    auto* oracle = app.add_subcommand("oracle-import", "import oracle reports (XML or CSV)");
    std::vector<std::string> oracle_paths;
    std::string oracle_source;
    oracle->add_option("paths", oracle_paths, "report files or directories")->required();
    oracle->add_option("--source", oracle_source, "override the report source id");

    // run / build-dataset / analyze
    auto* run = app.add_subcommand("run", "execute the manifest's test run groups");
    auto* build = app.add_subcommand("build-dataset", "build analysis datasets from stored groups");
    auto* analyze = app.add_subcommand("analyze", "run the H1/H2 analysis chain and write reports");
    std::vector<std::string> analyze_specs;
    analyze->add_option("--spec", analyze_specs,
                        "standalone analysis-spec file (repeatable); skips the manifest plan");

    // report
    auto* report = app.add_subcommand("report", "export stored data and result tables");
    std::string library_csv, results_csv, observations_csv, dataset_id, dataset_csv;
    std::int64_t observations_test = 0;
    report->add_option("--library", library_csv, "write the library listing CSV here");
    report->add_option("--results", results_csv, "write the result table CSV here");
    report->add_option("--observations", observations_test, "test id for an observation dump");
    report->add_option("--observations-out", observations_csv, "observation dump path");
    report->add_option("--dataset", dataset_id, "dataset id to export");
    report->add_option("--dataset-out", dataset_csv, "dataset export path");

    // synth-corpus
    auto* synth = app.add_subcommand("synth-corpus",
                                     "generate a synthetic corpus with matching oracle reports");
    std::string synth_out = "corpus";
    std::size_t synth_count = 240;
    std::uint64_t synth_seed = 1;
    bool synth_seed_given = false;
    synth->add_option("--out", synth_out, "corpus output directory");
    synth->add_option("--count", synth_count, "number of binaries");
    synth->add_option("--corpus-seed", synth_seed, "corpus seed")
        ->each([&](const std::string&) { synth_seed_given = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (ingest->parsed())
            return cmd_ingest(global, ingest_dir, sidecar, source_tag, tags);
        if (oracle->parsed()) return cmd_oracle_import(global, oracle_paths, oracle_source);
        if (run->parsed()) return cmd_run(global);
        if (build->parsed()) return cmd_build_dataset(global);
        if (analyze->parsed()) return cmd_analyze(global, analyze_specs);
        if (report->parsed())
            return cmd_report(global, library_csv, results_csv, observations_test,
                              observations_csv, dataset_id, dataset_csv);
        if (synth->parsed())
            return cmd_synth_corpus(global, synth_out, synth_count, synth_seed, synth_seed_given);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StoreError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return kExitStore;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return kExitAnalysis;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
