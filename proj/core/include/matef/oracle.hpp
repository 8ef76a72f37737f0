#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "matef/artefact_types.hpp"
#include "matef/store.hpp"

namespace matef {

/// One oracle report: per-type sets of nominal labels for a binary.
struct OracleReport {
    std::string md5;
    std::string source_id;
    std::map<ArtefactType, std::set<std::string>> artefacts;
    std::string received_at;
};

struct OracleParseOptions {
    /// Strict mode rejects unknown artefact-type tags; lax mode skips and
    /// records them.
    bool strict = true;
};

struct OracleParseResult {
    std::vector<OracleReport> reports;       // XML yields exactly one
    std::vector<std::string> skipped_tags;   // unknown tags seen in lax mode
};

/// Parses the canonical oracle ingest XML:
///   <report md5="..." source="..."><artefacts><file name="..."/>...</artefacts></report>
/// Throws ParseError (with position) on malformed documents; in strict mode an
/// unknown artefact-type tag is an error naming the tag.
OracleParseResult parse_oracle_xml(std::string_view text, const OracleParseOptions& opts = {});

/// Parses the CSV alternative, header `md5,type,label`, grouping rows into one
/// report per md5. source_id is caller-supplied (the format carries none).
OracleParseResult parse_oracle_csv(std::string_view text, const std::string& source_id,
                                   const OracleParseOptions& opts = {});

/// Persists a report keyed by (md5, source_id); latest ingest wins for that
/// key and re-ingesting an identical document changes nothing. Returns true
/// when the store changed.
bool ingest_report(ArtefactStore& store, const OracleReport& report);

/// Expected number of artefacts for the combo: sum over member types of the
/// per-type distinct-label counts. Throws AnalysisError ("unknown to oracle")
/// when no report exists for the hash.
std::int64_t expected_count(const ArtefactStore& store, const std::string& md5, TypeCombo combo,
                            const std::string& source_id);

}  // namespace matef
