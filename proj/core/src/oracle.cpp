#include "matef/oracle.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <sstream>

#include "matef/csv.hpp"
#include "matef/digest.hpp"
#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

// The attribute carrying the label, per artefact element.
std::string label_attribute(ArtefactType t) {
    switch (t) {
        case ArtefactType::File:
        case ArtefactType::Mutex: return "name";
        case ArtefactType::Registry: return "key";
        case ArtefactType::Port:
        case ArtefactType::RPort: return "number";
    }
    return "name";
}

std::string report_fingerprint(const OracleReport& report) {
    // Canonical text form of the label sets; identical documents (after
    // whitespace/ordering normalisation) produce identical fingerprints.
    std::string canon = report.md5 + "|" + report.source_id;
    for (ArtefactType t : kAllArtefactTypes) {
        canon += "|" + std::string(to_string(t)) + ":";
        if (const auto it = report.artefacts.find(t); it != report.artefacts.end())
            for (const auto& label : it->second) canon += label + "\x1f";
    }
    return sha256_hex(as_bytes(canon));
}

}  // namespace

OracleParseResult parse_oracle_xml(std::string_view text, const OracleParseOptions& opts) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError("oracle XML parse error: " + e.message(),
                         static_cast<std::size_t>(e.line()));
    }

    const auto report_node = tree.get_child_optional("report");
    if (!report_node) throw ParseError("oracle XML: missing <report> root element");

    OracleReport report;
    report.md5 = to_lower(trim(report_node->get<std::string>("<xmlattr>.md5", "")));
    report.source_id = trim(report_node->get<std::string>("<xmlattr>.source", ""));
    if (report.md5.size() != 32 || !is_lower_hex(report.md5))
        throw ParseError("oracle XML: report md5 attribute must be a 32-char hex digest");
    if (report.source_id.empty())
        throw ParseError("oracle XML: report source attribute must be non-empty");

    OracleParseResult result;
    const auto artefacts = report_node->get_child_optional("artefacts");
    if (!artefacts) throw ParseError("oracle XML: missing <artefacts> element");
    for (const auto& [tag, node] : *artefacts) {
        if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
        const auto type = artefact_type_from(tag);
        if (!type) {
            if (opts.strict)
                throw ParseError("oracle XML: unknown artefact-type tag <" + tag + ">");
            result.skipped_tags.push_back(tag);
            continue;
        }
        const std::string attr = label_attribute(*type);
        const auto label = node.get_optional<std::string>("<xmlattr>." + attr);
        if (!label)
            throw ParseError("oracle XML: <" + tag + "> element missing '" + attr +
                             "' attribute");
        report.artefacts[*type].insert(*label);
    }
    for (ArtefactType t : kAllArtefactTypes) report.artefacts.try_emplace(t);
    result.reports.push_back(std::move(report));
    return result;
}

OracleParseResult parse_oracle_csv(std::string_view text, const std::string& source_id,
                                   const OracleParseOptions& opts) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw ParseError("oracle CSV: empty document");
    if (rows[0].size() < 3 || rows[0][0] != "md5" || rows[0][1] != "type" ||
        rows[0][2] != "label")
        throw ParseError("oracle CSV: expected header md5,type,label", 1);

    OracleParseResult result;
    std::map<std::string, OracleReport> by_md5;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() < 3) throw ParseError("oracle CSV: row needs md5,type,label", i + 1);
        const std::string md5 = to_lower(trim(row[0]));
        if (md5.size() != 32 || !is_lower_hex(md5))
            throw ParseError("oracle CSV: bad md5 '" + row[0] + "'", i + 1);
        const auto type = artefact_type_from(trim(row[1]));
        if (!type) {
            if (opts.strict)
                throw ParseError("oracle CSV: unknown artefact type '" + row[1] + "'", i + 1);
            result.skipped_tags.push_back(row[1]);
            continue;
        }
        auto& report = by_md5[md5];
        report.md5 = md5;
        report.source_id = source_id;
        report.artefacts[*type].insert(row[2]);
    }
    for (auto& [md5, report] : by_md5) {
        for (ArtefactType t : kAllArtefactTypes) report.artefacts.try_emplace(t);
        result.reports.push_back(std::move(report));
    }
    return result;
}

bool ingest_report(ArtefactStore& store, const OracleReport& report) {
    OracleReport normalized = report;
    for (ArtefactType t : kAllArtefactTypes) normalized.artefacts.try_emplace(t);
    const std::string received =
        normalized.received_at.empty() ? utc_now_iso8601() : normalized.received_at;
    return store.upsert_oracle_report(normalized.md5, normalized.source_id, normalized.artefacts,
                                      report_fingerprint(normalized), received);
}

std::int64_t expected_count(const ArtefactStore& store, const std::string& md5, TypeCombo combo,
                            const std::string& source_id) {
    const auto counts = store.expected_counts(md5, source_id);
    if (!counts)
        throw AnalysisError("md5 " + md5 + " unknown to oracle (source '" + source_id + "')");
    return counts->total(combo);
}

}  // namespace matef
