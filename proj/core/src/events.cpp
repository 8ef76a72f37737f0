#include "matef/events.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <set>

#include "matef/errors.hpp"

namespace matef {

using nlohmann::json;

std::string events_to_jsonl(std::span<const CanonicalEvent> events) {
    std::string out;
    for (const auto& e : events) {
        json j;
        j["md5"] = e.md5;
        j["type"] = std::string(to_string(e.type));
        j["label"] = e.label;
        j["t_offset_s"] = e.t_offset_s;
        out += j.dump();
        out += '\n';
    }
    return out;
}

JsonlParseResult parse_events_jsonl(std::string_view text, bool strict) {
    JsonlParseResult result;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) {
            if (start > text.size()) break;
            continue;
        }

        const json j = json::parse(line, nullptr, false);
        auto bad = [&](const std::string& why) -> bool {
            if (strict) throw ParseError("canonical JSONL: " + why, line_no);
            ++result.unrecognized;
            return false;
        };
        if (j.is_discarded()) {
            bad("invalid JSON");
            continue;
        }
        if (!j.is_object() || !j.contains("md5") || !j.contains("type") ||
            !j.contains("label") || !j.contains("t_offset_s")) {
            bad("missing required field (md5/type/label/t_offset_s)");
            continue;
        }
        if (!j["md5"].is_string() || !j["type"].is_string() || !j["label"].is_string() ||
            !j["t_offset_s"].is_number()) {
            bad("field has wrong JSON type");
            continue;
        }
        const auto type = artefact_type_from(j["type"].get<std::string>());
        if (!type) {
            bad("unknown artefact type '" + j["type"].get<std::string>() + "'");
            continue;
        }
        CanonicalEvent e;
        e.md5 = j["md5"].get<std::string>();
        e.type = *type;
        e.label = j["label"].get<std::string>();
        e.t_offset_s = j["t_offset_s"].get<double>();
        if (e.label.empty()) {
            bad("empty label");
            continue;
        }
        if (e.t_offset_s < 0) {
            bad("negative t_offset_s");
            continue;
        }
        result.events.push_back(std::move(e));
    }
    return result;
}

TypeCounts count_by_type(std::span<const CanonicalEvent> events) {
    std::array<std::set<std::string_view>, 5> sets;
    for (const auto& e : events) sets[static_cast<std::size_t>(e.type)].insert(e.label);
    TypeCounts counts;
    for (ArtefactType t : kAllArtefactTypes)
        counts[t] = static_cast<std::int64_t>(sets[static_cast<std::size_t>(t)].size());
    return counts;
}

std::int64_t observed_count(std::span<const CanonicalEvent> events, TypeCombo combo) {
    return count_by_type(events).total(combo);
}

}  // namespace matef
