#include "matef/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "matef/csv.hpp"
#include "matef/dataset_builder.hpp"
#include "matef/errors.hpp"
#include "matef/rng.hpp"
#include "matef/sample_library.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

std::string fmt(const char* format, double v) {
    if (std::isnan(v)) return "NaN";
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

const ToolEntry& tool_entry(const ExperimentManifest& manifest, std::size_t index) {
    return manifest.tools.at(index);
}

std::string resolve_oracle_source(const ArtefactStore& store,
                                  const ExperimentManifest& manifest) {
    if (!manifest.oracle_source.empty()) return manifest.oracle_source;
    const auto sources = store.oracle_sources();
    if (sources.empty())
        throw ConfigError("no oracle reports in store; run oracle-import first");
    if (sources.size() > 1)
        throw ConfigError("store holds " + std::to_string(sources.size()) +
                          " oracle sources; set oracle.source in the manifest");
    return sources.front();
}

std::vector<std::string> load_sample_hashes(ArtefactStore& store,
                                            const ExperimentManifest& manifest) {
    if (!manifest.sample_hashes_file.empty()) {
        std::vector<std::string> hashes;
        for (const auto& line : split(read_file_text(manifest.sample_hashes_file.string()), '\n')) {
            const std::string h = trim(line);
            if (h.empty()) continue;
            if (h.size() != 32 || !is_lower_hex(h))
                throw ConfigError("sample.hashes_file: bad md5 '" + h + "'");
            hashes.push_back(h);
        }
        if (hashes.empty()) throw ConfigError("sample.hashes_file: no hashes");
        return hashes;
    }
    SampleLibrary library(store);
    return library.select_sample(manifest.sample_tag, manifest.sample_count, manifest.seed);
}

}  // namespace

AdapterRegistry adapters_from_manifest(const ExperimentManifest& manifest) {
    AdapterRegistry registry = AdapterRegistry::with_canonical();
    for (const auto& tool : manifest.tools) {
        if (tool.adapter == "csv") {
            const auto cfg = load_adapter_config(read_file_text(tool.adapter_config.string()));
            registry.register_adapter(tool.tool_id, std::make_shared<CsvLogAdapter>(cfg));
        } else {
            registry.register_adapter(tool.tool_id, std::make_shared<CanonicalJsonlAdapter>());
        }
    }
    return registry;
}

ExperimentRunReport run_experiment(ArtefactStore& store, const ExperimentManifest& manifest) {
    const AdapterRegistry adapters = adapters_from_manifest(manifest);
    const std::vector<std::string> sample = load_sample_hashes(store, manifest);

    LogSink sink;
    std::filesystem::path log_root;
    if (manifest.keep_logs) {
        log_root = manifest.output_dir / "logs";
        std::filesystem::create_directories(log_root);
        sink = [log_root](std::int64_t test_id, const std::string& md5,
                          std::span<const std::byte> log) {
            const auto dir = log_root / ("test" + std::to_string(test_id));
            std::filesystem::create_directories(dir);
            const auto path = dir / (md5 + ".jsonl");
            write_file_bytes(path.string(), log);
            return "test" + std::to_string(test_id) + "/" + md5 + ".jsonl";
        };
    }

    ExperimentRunReport report;
    report.sample_size = sample.size();
    std::optional<std::int64_t> originating_test;

    for (std::size_t ti = 0; ti < manifest.tools.size(); ++ti) {
        const ToolEntry& tool = tool_entry(manifest, ti);
        std::unique_ptr<GuestBackend> backend;
        if (manifest.backend == "sim")
            backend = std::make_unique<SimulatedBackend>(manifest.model, tool.profile);
        else
            backend = std::make_unique<HypervisorBackend>();

        for (std::size_t di = 0; di < manifest.durations_s.size(); ++di) {
            TestRunSpec spec;
            spec.tool_id = tool.tool_id;
            spec.duration_s = manifest.durations_s[di];
            spec.guest_count = manifest.guest_count;
            spec.stagger_s = manifest.stagger_s;
            spec.runs_per_group = manifest.runs_per_group;
            // Group-level seed: same sample, tool- and duration-specific runs.
            spec.seed = mix_seed(manifest.seed, mix_seed(ti + 1, di + 1));

            const TestRunGroup group =
                run_group(store, spec, sample, *backend, adapters, originating_test, sink);
            if (!originating_test) originating_test = group.run_ids[0];
            report.group_ids.push_back(group.group_id);
        }
    }
    report.originating_test_id = originating_test.value_or(0);
    return report;
}

std::string dataset_id_for(std::size_t tool_index, std::size_t duration_index) {
    std::string letters;
    std::size_t ti = tool_index;
    do {
        letters.insert(letters.begin(), static_cast<char>('A' + ti % 26));
        ti = ti / 26;
    } while (ti-- > 0);
    return letters + "." + std::to_string(duration_index + 1);
}

std::vector<BuiltDataset> build_experiment_datasets(ArtefactStore& store,
                                                    const ExperimentManifest& manifest) {
    const std::string source = resolve_oracle_source(store, manifest);
    const auto groups = store.list_groups();

    const auto dataset_dir = manifest.output_dir / "datasets";
    std::filesystem::create_directories(dataset_dir);

    std::vector<BuiltDataset> built;
    for (std::size_t ti = 0; ti < manifest.tools.size(); ++ti) {
        for (std::size_t di = 0; di < manifest.durations_s.size(); ++di) {
            const std::string& tool_id = manifest.tools[ti].tool_id;
            const std::int64_t duration = manifest.durations_s[di];
            // Latest matching group wins when the experiment was rerun.
            const auto it = std::find_if(groups.rbegin(), groups.rend(),
                                         [&](const GroupRecord& g) {
                                             return g.tool_id == tool_id &&
                                                    g.duration_s == duration;
                                         });
            if (it == groups.rend())
                throw AnalysisError("no stored group for tool '" + tool_id + "' at " +
                                    std::to_string(duration) + " s; run the experiment first");
            const std::string id = dataset_id_for(ti, di);
            const auto result = build_dataset(store, it->group_id, manifest.combo, source, id);
            export_dataset_files(store, id, dataset_dir / (id + ".csv"));
            built.push_back({id, result.rows.size(), result.dropped_unknown_to_oracle});
        }
    }
    return built;
}

std::string short_duration(std::int64_t seconds) {
    if (seconds % 60 == 0 && seconds >= 60) return std::to_string(seconds / 60) + "m";
    return std::to_string(seconds) + "s";
}

std::string long_duration(std::int64_t seconds) {
    if (seconds % 60 == 0 && seconds >= 60) return std::to_string(seconds / 60) + " minute";
    return std::to_string(seconds) + " second";
}

namespace {
// Pluralized noun form: "10 seconds", "1 minute", "5 minutes".
std::string duration_noun(std::int64_t seconds) {
    if (seconds % 60 == 0 && seconds >= 60) {
        const std::int64_t minutes = seconds / 60;
        return std::to_string(minutes) + (minutes == 1 ? " minute" : " minutes");
    }
    return std::to_string(seconds) + (seconds == 1 ? " second" : " seconds");
}
}  // namespace

std::vector<PlanEntry> h1_plan(const ExperimentManifest& manifest) {
    std::vector<PlanEntry> plan;
    const auto& durations = manifest.durations_s;
    const auto ref_it = std::find(durations.begin(), durations.end(), manifest.h1_reference_s);
    const std::size_t ref_index =
        ref_it == durations.end() ? 0 : static_cast<std::size_t>(ref_it - durations.begin());
    const std::int64_t ref = durations[ref_index];

    for (std::size_t ti = 0; ti < manifest.tools.size(); ++ti) {
        std::size_t comparison = 0;
        for (std::size_t di = 0; di < durations.size(); ++di) {
            if (di == ref_index) continue;
            ++comparison;
            PlanEntry entry;
            entry.hypothesis = stats::Hypothesis::H1;
            entry.label = std::to_string(ti + 1) + "." + std::to_string(comparison);
            entry.description = "Comparing " + long_duration(ref) + " to " +
                                long_duration(durations[di]) + " execution times";
            entry.short_desc = short_duration(ref) + " vs " + short_duration(durations[di]);
            entry.dataset_a = dataset_id_for(ti, ref_index);
            entry.dataset_b = dataset_id_for(ti, di);
            plan.push_back(std::move(entry));
        }
    }
    return plan;
}

std::vector<PlanEntry> h2_plan(const ExperimentManifest& manifest) {
    std::vector<PlanEntry> plan;
    if (manifest.tools.size() < 2) return plan;
    const std::string& tool_a = manifest.tools[0].tool_id;
    const std::string& tool_b = manifest.tools[1].tool_id;
    const std::size_t group = manifest.tools.size() + 1;

    for (std::size_t di = 0; di < manifest.durations_s.size(); ++di) {
        PlanEntry entry;
        entry.hypothesis = stats::Hypothesis::H2;
        entry.label = std::to_string(group) + "." + std::to_string(di + 1);
        entry.description = tool_a + " vs " + tool_b + ", run for " +
                            duration_noun(manifest.durations_s[di]);
        entry.short_desc =
            tool_a + "-" + tool_b + " (" + short_duration(manifest.durations_s[di]) + ")";
        entry.dataset_a = dataset_id_for(0, di);
        entry.dataset_b = dataset_id_for(1, di);
        plan.push_back(std::move(entry));
    }
    return plan;
}

std::string render_results_csv(std::span<const AnalysisResultRow> rows) {
    std::string out = "Test,Description,r,z,SE,T,p,N,Result\n";
    for (const auto& row : rows) {
        const std::string result_word =
            (row.decision == "reject" ? "Reject " : "Retain ") + row.hypothesis;
        const std::string fields[] = {row.label,
                                      row.description,
                                      fmt("%.4f", row.r),
                                      fmt("%.3f", row.z),
                                      fmt("%.3f", row.se),
                                      fmt("%.3f", row.t),
                                      fmt("%.3f", row.p),
                                      std::to_string(row.n),
                                      result_word};
        out += csv::join_row(fields) + "\n";
    }
    return out;
}

std::string render_results_text(std::span<const AnalysisResultRow> rows) {
    const std::array<std::string, 9> header = {"Test", "Description", "r",  "z", "SE",
                                               "T",    "p",           "N", "Result"};
    std::vector<std::array<std::string, 9>> table;
    for (const auto& row : rows) {
        table.push_back({row.label, row.description, fmt("%.4f", row.r), fmt("%.3f", row.z),
                         fmt("%.3f", row.se), fmt("%.3f", row.t), fmt("%.3f", row.p),
                         std::to_string(row.n),
                         (row.decision == "reject" ? "Reject " : "Retain ") + row.hypothesis});
    }
    std::array<std::size_t, 9> widths{};
    for (std::size_t c = 0; c < 9; ++c) {
        widths[c] = header[c].size();
        for (const auto& row : table) widths[c] = std::max(widths[c], row[c].size());
    }
    auto emit_row = [&](const std::array<std::string, 9>& row) {
        std::string line;
        for (std::size_t c = 0; c < 9; ++c) {
            std::string cell = row[c];
            cell.resize(widths[c], ' ');
            line += cell;
            if (c + 1 < 9) line += "  ";
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        return line + "\n";
    };
    std::string out = emit_row(header);
    for (const auto& row : table) out += emit_row(row);
    return out;
}

namespace {

void write_plan_csv(const std::filesystem::path& path, std::span<const PlanEntry> plan,
                    const std::vector<stats::AnalysisOutcome>& outcomes, std::size_t offset) {
    std::string out = "Test,Analysis description,Datasets,Number rows\n";
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& entry = plan[i];
        const auto& wilcoxon = outcomes[offset + i].wilcoxon;
        const std::string fields[] = {entry.label, entry.description,
                                      entry.dataset_a + ", " + entry.dataset_b,
                                      std::to_string(wilcoxon.N)};
        out += csv::join_row(fields) + "\n";
    }
    write_file_text(path.string(), out);
}

void write_normality_csv(const std::filesystem::path& path,
                         const std::vector<stats::AnalysisOutcome>& outcomes) {
    std::string out = "Test,Dataset,Method,Statistic,p,N,Note\n";
    for (const auto& outcome : outcomes) {
        auto emit = [&](const std::string& dataset, const stats::SideNormality& side) {
            auto one = [&](const char* method, const std::optional<stats::NormalityResult>& r) {
                const std::string fields[] = {
                    outcome.spec.label,
                    dataset,
                    method,
                    r ? fmt("%.6f", r->statistic) : "NaN",
                    r ? fmt("%.6f", r->p) : "NaN",
                    std::to_string(r ? r->n : 0),
                    r ? "" : side.note};
                out += csv::join_row(fields) + "\n";
            };
            one("kolmogorov_smirnov", side.ks);
            one("shapiro_wilk", side.sw);
        };
        emit(outcome.spec.dataset_a_id, outcome.normality_a);
        emit(outcome.spec.dataset_b_id, outcome.normality_b);
    }
    write_file_text(path.string(), out);
}

}  // namespace

AnalyzeReport analyze_experiment(ArtefactStore& store, const ExperimentManifest& manifest) {
    const auto plan_h1 = h1_plan(manifest);
    const auto plan_h2 = h2_plan(manifest);

    const auto reports_dir = manifest.output_dir / "reports";
    std::filesystem::create_directories(reports_dir);

    AnalyzeReport report;
    auto run_entries = [&](std::span<const PlanEntry> plan) {
        for (const auto& entry : plan) {
            stats::AnalysisSpec spec;
            spec.hypothesis = entry.hypothesis;
            spec.dataset_a_id = entry.dataset_a;
            spec.dataset_b_id = entry.dataset_b;
            spec.alpha = manifest.alpha;
            spec.outlier_method = manifest.outlier_method;
            spec.label = entry.label;
            spec.description = entry.short_desc;
            if (manifest.wilcoxon_zeros == "pratt")
                spec.wilcoxon.zeros = stats::ZeroPolicy::pratt;
            spec.wilcoxon.continuity_correction = manifest.continuity_correction;
            report.outcomes.push_back(stats::run_analysis(store, spec));
        }
    };
    run_entries(plan_h1);
    run_entries(plan_h2);

    // Result rows for the files come from this invocation's outcomes.
    auto rows_for = [&](std::size_t offset, std::size_t count) {
        std::vector<AnalysisResultRow> rows;
        for (std::size_t i = offset; i < offset + count; ++i) {
            const auto& o = report.outcomes[i];
            AnalysisResultRow row;
            row.label = o.spec.label;
            row.description = o.spec.description;
            row.hypothesis = stats::to_string(o.spec.hypothesis);
            row.r = o.wilcoxon.r;
            row.z = o.wilcoxon.z;
            row.se = o.wilcoxon.SE;
            row.t = o.wilcoxon.T;
            row.p = o.wilcoxon.p;
            row.n = static_cast<std::int64_t>(o.wilcoxon.N);
            row.decision = stats::to_string(o.wilcoxon.decision);
            rows.push_back(std::move(row));
        }
        return rows;
    };

    // One H1 result table per tool, one shared H2 table.
    std::size_t offset = 0;
    const std::size_t per_tool = manifest.durations_s.size() - 1;
    for (std::size_t ti = 0; ti < manifest.tools.size() && per_tool > 0; ++ti) {
        const auto rows = rows_for(offset, per_tool);
        const auto base = reports_dir / ("h1_" + manifest.tools[ti].tool_id);
        write_file_text(base.string() + ".csv", render_results_csv(rows));
        write_file_text(base.string() + ".txt", render_results_text(rows));
        report.report_files.push_back(base.string() + ".csv");
        report.report_files.push_back(base.string() + ".txt");
        offset += per_tool;
    }
    if (!plan_h2.empty()) {
        const auto rows = rows_for(offset, plan_h2.size());
        const auto base = reports_dir / "h2";
        write_file_text(base.string() + ".csv", render_results_csv(rows));
        write_file_text(base.string() + ".txt", render_results_text(rows));
        report.report_files.push_back(base.string() + ".csv");
        report.report_files.push_back(base.string() + ".txt");
    }

    // Pairing plans with the post-outlier row counts.
    std::size_t h1_offset = 0;
    for (std::size_t ti = 0; ti < manifest.tools.size() && per_tool > 0; ++ti) {
        const std::span<const PlanEntry> tool_plan(plan_h1.data() + h1_offset, per_tool);
        const auto path = reports_dir / ("plan_h1_" + manifest.tools[ti].tool_id + ".csv");
        write_plan_csv(path, tool_plan, report.outcomes, h1_offset);
        report.report_files.push_back(path);
        h1_offset += per_tool;
    }
    if (!plan_h2.empty()) {
        const auto path = reports_dir / "plan_h2.csv";
        write_plan_csv(path, plan_h2, report.outcomes, h1_offset);
        report.report_files.push_back(path);
    }

    const auto normality_path = reports_dir / "normality.csv";
    write_normality_csv(normality_path, report.outcomes);
    report.report_files.push_back(normality_path);

    return report;
}

}  // namespace matef
