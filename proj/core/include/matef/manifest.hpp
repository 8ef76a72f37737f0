#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matef/sim_model.hpp"
#include "matef/stats.hpp"

namespace matef {

/// Parsed `key = value` file ('#' comments, blank lines ignored).
class KeyValues {
public:
    static KeyValues parse_text(std::string_view text);
    static KeyValues parse_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    std::string require(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Keys never read via the accessors above; used to reject typos.
    std::vector<std::string> unconsumed() const;
    const std::map<std::string, std::string>& all() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
    mutable std::map<std::string, bool> consumed_;
};

/// One tool under test, as configured in the manifest.
struct ToolEntry {
    std::string tool_id;
    std::string adapter = "canonical";            // "canonical" or "csv"
    std::filesystem::path adapter_config;         // for csv adapters
    ToolProfile profile;                          // simulated-backend capture profile
};

/// Everything one reproducible experiment needs.
struct ExperimentManifest {
    std::string name = "experiment";
    std::filesystem::path store_path;
    std::filesystem::path output_dir = "out";

    std::uint64_t seed = 0;
    std::string sample_tag = "network_artefacts";
    std::size_t sample_count = 0;                   // 0 = use explicit list
    std::filesystem::path sample_hashes_file;       // one md5 per line (optional)

    std::vector<ToolEntry> tools;
    std::vector<std::int64_t> durations_s;
    int runs_per_group = 3;
    TypeCombo combo = TypeCombo::port_only();
    std::string backend = "sim";  // sim | hypervisor
    int guest_count = 60;
    std::int64_t stagger_s = 10;
    bool keep_logs = true;

    SimModelParams model;
    std::string oracle_source;  // empty = the store's single source

    double alpha = 0.05;
    stats::OutlierMethod outlier_method = stats::OutlierMethod::tukey_1_5_iqr;
    std::int64_t h1_reference_s = 60;
    std::string wilcoxon_zeros = "drop";  // drop | pratt
    bool continuity_correction = false;
};

/// Loads and validates a manifest; unknown keys are configuration errors.
ExperimentManifest load_manifest(const std::filesystem::path& path);
ExperimentManifest manifest_from_keyvalues(const KeyValues& kv,
                                           const std::filesystem::path& base_dir);

/// Standalone analysis-spec file mirroring stats::AnalysisSpec.
stats::AnalysisSpec load_analysis_spec(const std::filesystem::path& path);

}  // namespace matef
