#include "matef/manifest.hpp"

#include <algorithm>
#include <set>

#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

KeyValues KeyValues::parse_text(std::string_view text) {
    KeyValues out;
    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        std::string line = raw_line;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        out.kv_[key] = value;
    }
    return out;
}

KeyValues KeyValues::parse_file(const std::filesystem::path& path) {
    return parse_text(read_file_text(path.string()));
}

bool KeyValues::has(const std::string& key) const {
    consumed_[key] = true;
    return kv_.count(key) != 0;
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
    consumed_[key] = true;
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string KeyValues::require(const std::string& key) const {
    consumed_[key] = true;
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
    const std::string v = get(key, "");
    if (v.empty()) return fallback;
    try {
        return std::stoll(v);
    } catch (...) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string v = get(key, "");
    if (v.empty()) return fallback;
    try {
        return std::stoull(v);
    } catch (...) {
        throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
    }
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    const std::string v = get(key, "");
    if (v.empty()) return fallback;
    try {
        return std::stod(v);
    } catch (...) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const std::string v = to_lower(get(key, ""));
    if (v.empty()) return fallback;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> KeyValues::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, _] : kv_)
        if (!consumed_.count(key)) out.push_back(key);
    return out;
}

namespace {

std::vector<std::string> csv_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& part : split(value, ','))
        if (!trim(part).empty()) out.push_back(trim(part));
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

}  // namespace

ExperimentManifest manifest_from_keyvalues(const KeyValues& kv,
                                           const std::filesystem::path& base_dir) {
    ExperimentManifest m;
    m.name = kv.get("name", m.name);
    m.store_path = resolve(base_dir, kv.get("store", "matef.db"));
    m.output_dir = resolve(base_dir, kv.get("output_dir", "out"));
    m.seed = kv.get_u64("seed", 0);

    m.sample_tag = kv.get("sample.tag", m.sample_tag);
    m.sample_count = static_cast<std::size_t>(kv.get_int("sample.count", 0));
    if (kv.has("sample.hashes_file"))
        m.sample_hashes_file = resolve(base_dir, kv.get("sample.hashes_file", ""));
    if (m.sample_count == 0 && m.sample_hashes_file.empty())
        throw ConfigError("manifest: set sample.count (with sample.tag) or sample.hashes_file");

    const auto tool_ids = csv_list(kv.require("tools"));
    if (tool_ids.empty()) throw ConfigError("manifest: 'tools' must name at least one tool");
    if (std::set<std::string>(tool_ids.begin(), tool_ids.end()).size() != tool_ids.size())
        throw ConfigError("manifest: duplicate tool id in 'tools'");

    for (const auto& d : csv_list(kv.require("durations_s"))) {
        try {
            m.durations_s.push_back(std::stoll(d));
        } catch (...) {
            throw ConfigError("manifest: bad duration '" + d + "'");
        }
        if (m.durations_s.back() <= 0) throw ConfigError("manifest: durations must be positive");
    }
    if (m.durations_s.empty()) throw ConfigError("manifest: 'durations_s' must be non-empty");
    if (std::set<std::int64_t>(m.durations_s.begin(), m.durations_s.end()).size() !=
        m.durations_s.size())
        throw ConfigError("manifest: duplicate duration in 'durations_s'");

    m.runs_per_group = static_cast<int>(kv.get_int("runs_per_group", 3));
    if (m.runs_per_group != 3)
        throw ConfigError("manifest: runs_per_group must be 3 (the repeatability protocol)");

    const std::string combo_text = kv.get("combo", "PortOnly");
    const auto combo = TypeCombo::parse(combo_text);
    if (!combo) throw ConfigError("manifest: bad combo '" + combo_text + "'");
    m.combo = *combo;

    m.backend = kv.get("backend", "sim");
    if (m.backend != "sim" && m.backend != "hypervisor")
        throw ConfigError("manifest: backend must be 'sim' or 'hypervisor'");
    m.guest_count = static_cast<int>(kv.get_int("guest_count", 60));
    if (m.guest_count < 1) throw ConfigError("manifest: guest_count must be >= 1");
    m.stagger_s = kv.get_int("stagger_s", 10);
    if (m.stagger_s < 0) throw ConfigError("manifest: stagger_s must be >= 0");
    m.keep_logs = kv.get_bool("keep_logs", true);

    m.model.file_mean = kv.get_double("sim.file_mean", m.model.file_mean);
    m.model.mutex_mean = kv.get_double("sim.mutex_mean", m.model.mutex_mean);
    m.model.registry_mean = kv.get_double("sim.registry_mean", m.model.registry_mean);
    m.model.port_mean = kv.get_double("sim.port_mean", m.model.port_mean);
    m.model.rport_mean = kv.get_double("sim.rport_mean", m.model.rport_mean);
    m.model.saturation_s = kv.get_double("sim.saturation_s", m.model.saturation_s);
    m.model.failure_prob = kv.get_double("sim.failure_prob", m.model.failure_prob);
    m.model.variability_prob = kv.get_double("sim.variability_prob", m.model.variability_prob);
    m.model.jitter_mean = kv.get_double("sim.jitter_mean", m.model.jitter_mean);
    m.model.overhead_s = kv.get_double("sim.overhead_s", m.model.overhead_s);

    for (const auto& id : tool_ids) {
        ToolEntry entry;
        entry.tool_id = id;
        entry.adapter = kv.get("tool." + id + ".adapter", "canonical");
        if (entry.adapter != "canonical" && entry.adapter != "csv")
            throw ConfigError("manifest: tool." + id + ".adapter must be 'canonical' or 'csv'");
        if (entry.adapter == "csv") {
            entry.adapter_config =
                resolve(base_dir, kv.require("tool." + id + ".adapter_config"));
        } else {
            (void)kv.get("tool." + id + ".adapter_config", "");
        }
        entry.profile.tool_id = id;
        entry.profile.efficiency = kv.get_double("tool." + id + ".efficiency", 1.0);
        if (entry.profile.efficiency <= 0.0 || entry.profile.efficiency > 1.0)
            throw ConfigError("manifest: tool." + id + ".efficiency must be in (0,1]");
        if (kv.has("tool." + id + ".coverage")) {
            const auto cover = TypeCombo::parse(kv.get("tool." + id + ".coverage", ""));
            if (!cover) throw ConfigError("manifest: bad tool." + id + ".coverage");
            entry.profile.coverage_mask = cover->mask();
        }
        m.tools.push_back(std::move(entry));
    }

    m.oracle_source = kv.get("oracle.source", "");
    m.alpha = kv.get_double("analysis.alpha", 0.05);
    if (!(m.alpha > 0.0 && m.alpha < 1.0))
        throw ConfigError("manifest: analysis.alpha must lie in (0,1)");
    const std::string method = kv.get("analysis.outlier_method", "tukey_1_5_iqr");
    const auto parsed_method = stats::outlier_method_from(method);
    if (!parsed_method) throw ConfigError("manifest: bad analysis.outlier_method '" + method + "'");
    m.outlier_method = *parsed_method;
    m.h1_reference_s = kv.get_int("analysis.h1_reference_s", 60);
    m.wilcoxon_zeros = kv.get("analysis.wilcoxon_zeros", "drop");
    if (m.wilcoxon_zeros != "drop" && m.wilcoxon_zeros != "pratt")
        throw ConfigError("manifest: analysis.wilcoxon_zeros must be 'drop' or 'pratt'");
    m.continuity_correction = kv.get_bool("analysis.continuity_correction", false);

    if (const auto unknown = kv.unconsumed(); !unknown.empty())
        throw ConfigError("manifest: unknown key '" + unknown.front() + "'");

    if (std::find(m.durations_s.begin(), m.durations_s.end(), m.h1_reference_s) ==
            m.durations_s.end() &&
        m.durations_s.size() > 1)
        throw ConfigError("manifest: analysis.h1_reference_s (" +
                          std::to_string(m.h1_reference_s) + ") is not one of durations_s");
    return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
    const auto kv = KeyValues::parse_file(path);
    return manifest_from_keyvalues(kv, path.parent_path());
}

stats::AnalysisSpec load_analysis_spec(const std::filesystem::path& path) {
    const auto kv = KeyValues::parse_file(path);
    stats::AnalysisSpec spec;
    const std::string hyp = to_lower(kv.get("hypothesis", "h1"));
    if (hyp == "h1") spec.hypothesis = stats::Hypothesis::H1;
    else if (hyp == "h2") spec.hypothesis = stats::Hypothesis::H2;
    else throw ConfigError("analysis spec: hypothesis must be H1 or H2");
    spec.dataset_a_id = kv.require("dataset_a");
    spec.dataset_b_id = kv.require("dataset_b");
    spec.alpha = kv.get_double("alpha", 0.05);
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
        throw ConfigError("analysis spec: alpha must lie in (0,1)");
    const std::string method = kv.get("outlier_method", "tukey_1_5_iqr");
    const auto parsed = stats::outlier_method_from(method);
    if (!parsed) throw ConfigError("analysis spec: bad outlier_method '" + method + "'");
    spec.outlier_method = *parsed;
    spec.label = kv.get("label", "");
    spec.description = kv.get("description", "");
    const std::string zeros = kv.get("wilcoxon_zeros", "drop");
    if (zeros == "pratt") spec.wilcoxon.zeros = stats::ZeroPolicy::pratt;
    else if (zeros != "drop") throw ConfigError("analysis spec: wilcoxon_zeros must be drop|pratt");
    spec.wilcoxon.continuity_correction = kv.get_bool("continuity_correction", false);
    if (const auto unknown = kv.unconsumed(); !unknown.empty())
        throw ConfigError("analysis spec: unknown key '" + unknown.front() + "'");
    return spec;
}

}  // namespace matef
