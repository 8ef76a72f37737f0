#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matef/events.hpp"

namespace matef {

/// Parses one tool's raw log bytes into canonical events.
class LogAdapter {
public:
    virtual ~LogAdapter() = default;
    virtual std::string name() const = 0;
    virtual JsonlParseResult parse(std::span<const std::byte> raw, const std::string& md5,
                                   bool strict) const = 0;
};

/// Reference adapter for the canonical JSONL event format; the path all
/// acceptance tests use.
class CanonicalJsonlAdapter final : public LogAdapter {
public:
    std::string name() const override { return "canonical"; }
    JsonlParseResult parse(std::span<const std::byte> raw, const std::string& md5,
                           bool strict) const override;
};

/// Configuration-driven CSV adapter for vendor tool exports (process-monitor
/// style event logs, TCP-connection listers). Column positions/names and the
/// vendor event-class -> ArtefactType mapping come from a JSON config, since
/// vendor formats vary by tool version.
struct CsvAdapterConfig {
    std::string tool_name;
    char delimiter = ',';
    bool has_header = true;
    // Columns addressed by header name (when has_header) or 0-based index.
    std::string class_column;
    std::string label_column;
    std::string time_column;  // optional; empty -> t_offset_s = 0
    double time_divisor = 1.0;
    std::map<std::string, ArtefactType> class_map;  // unmapped classes are unrecognized
};

/// Loads a CsvAdapterConfig from its JSON form. Throws ParseError/ConfigError.
CsvAdapterConfig load_adapter_config(std::string_view json_text);

class CsvLogAdapter final : public LogAdapter {
public:
    explicit CsvLogAdapter(CsvAdapterConfig config) : config_(std::move(config)) {}
    std::string name() const override { return config_.tool_name; }
    JsonlParseResult parse(std::span<const std::byte> raw, const std::string& md5,
                           bool strict) const override;

private:
    CsvAdapterConfig config_;
};

/// Registry of tool_id -> adapter.
class AdapterRegistry {
public:
    /// Registry with the canonical adapter registered under "canonical".
    static AdapterRegistry with_canonical();

    void register_adapter(const std::string& tool_id, std::shared_ptr<const LogAdapter> adapter);
    bool has(const std::string& tool_id) const;
    /// Throws ConfigError listing registered adapters when tool_id is unknown.
    const LogAdapter& require(const std::string& tool_id) const;
    std::vector<std::string> registered() const;

private:
    std::map<std::string, std::shared_ptr<const LogAdapter>> adapters_;
};

/// Parses a raw tool log via the registered adapter.
JsonlParseResult parse_log(const AdapterRegistry& registry, const std::string& tool_id,
                           std::span<const std::byte> raw, const std::string& md5,
                           bool strict = false);

}  // namespace matef
