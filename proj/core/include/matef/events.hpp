#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matef/artefact_types.hpp"
#include "matef/store.hpp"

namespace matef {

/// One artefact event in canonical form. Labels are nominal: equality is the
/// only operation ever applied to them.
struct CanonicalEvent {
    std::string md5;
    ArtefactType type = ArtefactType::File;
    std::string label;
    double t_offset_s = 0.0;

    bool operator==(const CanonicalEvent&) const = default;
};

/// Serializes events as JSON Lines: {"md5":...,"type":...,"label":...,"t_offset_s":...}
std::string events_to_jsonl(std::span<const CanonicalEvent> events);

struct JsonlParseResult {
    std::vector<CanonicalEvent> events;
    std::size_t unrecognized = 0;  // lines skipped in lax mode
};

/// Parses canonical JSONL. Strict mode throws ParseError (with the line
/// number) on any undecodable line; lax mode counts and skips.
JsonlParseResult parse_events_jsonl(std::string_view text, bool strict);

/// Distinct labels per type (the per-type set cardinalities).
TypeCounts count_by_type(std::span<const CanonicalEvent> events);

/// Observed number of artefacts for a combo: distinct (type,label) pairs with
/// type in the combo, i.e. the per-type distinct-label counts summed. Event
/// order, multiplicity and t_offset_s never affect the result.
std::int64_t observed_count(std::span<const CanonicalEvent> events, TypeCombo combo);

}  // namespace matef
