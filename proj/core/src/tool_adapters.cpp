#include "matef/tool_adapters.hpp"

#include <nlohmann/json.hpp>

#include <charconv>

#include "matef/csv.hpp"
#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

using nlohmann::json;

JsonlParseResult CanonicalJsonlAdapter::parse(std::span<const std::byte> raw,
                                              const std::string& md5, bool strict) const {
    auto result = parse_events_jsonl(as_text(raw), strict);
    // The log's own md5 field wins when present; default it otherwise.
    for (auto& e : result.events)
        if (e.md5.empty()) e.md5 = md5;
    return result;
}

CsvAdapterConfig load_adapter_config(std::string_view json_text) {
    const json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ParseError("adapter config: invalid JSON");
    if (!j.is_object()) throw ParseError("adapter config: expected a JSON object");

    CsvAdapterConfig cfg;
    cfg.tool_name = j.value("tool", "");
    if (cfg.tool_name.empty()) throw ConfigError("adapter config: 'tool' name required");
    const std::string delim = j.value("delimiter", ",");
    if (delim.size() != 1) throw ConfigError("adapter config: delimiter must be one character");
    cfg.delimiter = delim[0];
    cfg.has_header = j.value("has_header", true);
    if (!j.contains("columns") || !j["columns"].is_object())
        throw ConfigError("adapter config: 'columns' object required");
    const auto& cols = j["columns"];
    auto col = [&](const char* key) -> std::string {
        if (!cols.contains(key)) return "";
        if (cols[key].is_number_integer()) return std::to_string(cols[key].get<int>());
        return cols[key].get<std::string>();
    };
    cfg.class_column = col("class");
    cfg.label_column = col("label");
    cfg.time_column = col("time");
    if (cfg.class_column.empty() || cfg.label_column.empty())
        throw ConfigError("adapter config: columns.class and columns.label required");
    cfg.time_divisor = j.value("time_divisor", 1.0);
    if (!j.contains("class_map") || !j["class_map"].is_object())
        throw ConfigError("adapter config: 'class_map' object required");
    for (const auto& [cls, type_name] : j["class_map"].items()) {
        const auto t = artefact_type_from(type_name.get<std::string>());
        if (!t)
            throw ConfigError("adapter config: class_map entry '" + cls +
                              "' maps to unknown type '" + type_name.get<std::string>() + "'");
        cfg.class_map[cls] = *t;
    }
    return cfg;
}

JsonlParseResult CsvLogAdapter::parse(std::span<const std::byte> raw, const std::string& md5,
                                      bool strict) const {
    JsonlParseResult result;
    const std::string_view text = as_text(raw);
    std::vector<std::vector<std::string>> rows;
    if (config_.delimiter == ',') {
        rows = csv::parse(text);
    } else {
        // Simple split for non-comma delimiters (vendor TSV exports don't quote).
        for (const auto& line : split(text, '\n')) {
            if (line.empty()) continue;
            std::string l = line;
            if (!l.empty() && l.back() == '\r') l.pop_back();
            rows.push_back(split(l, config_.delimiter));
        }
    }
    if (rows.empty()) return result;

    std::size_t class_idx = 0, label_idx = 0, time_idx = 0;
    bool has_time = !config_.time_column.empty();
    auto resolve = [&](const std::string& spec, const std::vector<std::string>& header,
                       const char* what) -> std::size_t {
        int idx = -1;
        const auto [p, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), idx);
        if (ec == std::errc() && p == spec.data() + spec.size() && idx >= 0)
            return static_cast<std::size_t>(idx);
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == spec) return i;
        throw ConfigError(std::string("adapter '") + config_.tool_name + "': " + what +
                          " column '" + spec + "' not found in log header");
    };
    std::size_t first_row = 0;
    const std::vector<std::string> empty_header;
    const auto& header = config_.has_header ? rows[0] : empty_header;
    if (config_.has_header) first_row = 1;
    class_idx = resolve(config_.class_column, header, "class");
    label_idx = resolve(config_.label_column, header, "label");
    if (has_time) time_idx = resolve(config_.time_column, header, "time");

    for (std::size_t i = first_row; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) continue;
        const std::size_t needed = std::max({class_idx, label_idx, has_time ? time_idx : 0});
        auto reject = [&](const std::string& why) {
            if (strict) throw ParseError("log for tool '" + config_.tool_name + "': " + why, i + 1);
            ++result.unrecognized;
        };
        if (row.size() <= needed) {
            reject("row too short");
            continue;
        }
        const auto it = config_.class_map.find(row[class_idx]);
        if (it == config_.class_map.end()) {
            // Vendor logs carry many event classes that are not artefacts;
            // unmapped classes count as unrecognized, fatal only in strict mode.
            reject("unmapped event class '" + row[class_idx] + "'");
            continue;
        }
        if (row[label_idx].empty()) {
            reject("empty label");
            continue;
        }
        CanonicalEvent e;
        e.md5 = md5;
        e.type = it->second;
        e.label = row[label_idx];
        if (has_time) {
            try {
                e.t_offset_s = std::stod(row[time_idx]) / config_.time_divisor;
            } catch (...) {
                e.t_offset_s = 0.0;
            }
            if (e.t_offset_s < 0) e.t_offset_s = 0.0;
        }
        result.events.push_back(std::move(e));
    }
    return result;
}

AdapterRegistry AdapterRegistry::with_canonical() {
    AdapterRegistry registry;
    registry.register_adapter("canonical", std::make_shared<CanonicalJsonlAdapter>());
    return registry;
}

void AdapterRegistry::register_adapter(const std::string& tool_id,
                                       std::shared_ptr<const LogAdapter> adapter) {
    adapters_[tool_id] = std::move(adapter);
}

bool AdapterRegistry::has(const std::string& tool_id) const {
    return adapters_.count(tool_id) != 0;
}

const LogAdapter& AdapterRegistry::require(const std::string& tool_id) const {
    const auto it = adapters_.find(tool_id);
    if (it == adapters_.end()) {
        std::string names;
        for (const auto& [id, _] : adapters_) {
            if (!names.empty()) names += ", ";
            names += id;
        }
        throw ConfigError("no adapter registered for tool '" + tool_id +
                          "' (registered: " + (names.empty() ? "<none>" : names) + ")");
    }
    return *it->second;
}

std::vector<std::string> AdapterRegistry::registered() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : adapters_) out.push_back(id);
    return out;
}

JsonlParseResult parse_log(const AdapterRegistry& registry, const std::string& tool_id,
                           std::span<const std::byte> raw, const std::string& md5, bool strict) {
    return registry.require(tool_id).parse(raw, md5, strict);
}

}  // namespace matef
