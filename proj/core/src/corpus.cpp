#include "matef/corpus.hpp"

#include <map>
#include <set>

#include "matef/csv.hpp"
#include "matef/digest.hpp"
#include "matef/errors.hpp"
#include "matef/rng.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c; break;
        }
    }
    return out;
}

std::string element_for(ArtefactType t) {
    switch (t) {
        case ArtefactType::File: return "file";
        case ArtefactType::Mutex: return "mutex";
        case ArtefactType::Registry: return "registry";
        case ArtefactType::Port: return "port";
        case ArtefactType::RPort: return "rport";
    }
    return "?";
}

std::string attribute_for(ArtefactType t) {
    switch (t) {
        case ArtefactType::File:
        case ArtefactType::Mutex: return "name";
        case ArtefactType::Registry: return "key";
        case ArtefactType::Port:
        case ArtefactType::RPort: return "number";
    }
    return "name";
}

}  // namespace

std::string oracle_xml_for(const std::string& md5, const SimModelParams& model,
                           const std::string& source_id) {
    std::map<ArtefactType, std::set<std::string>> labels;
    for (const auto& e : intrinsic_events(md5, model)) labels[e.type].insert(e.label);

    std::string xml = "<report md5=\"" + md5 + "\" source=\"" + xml_escape(source_id) + "\">\n";
    xml += "  <artefacts>\n";
    for (ArtefactType t : kAllArtefactTypes) {
        for (const auto& label : labels[t])
            xml += "    <" + element_for(t) + " " + attribute_for(t) + "=\"" +
                   xml_escape(label) + "\"/>\n";
    }
    xml += "  </artefacts>\n</report>\n";
    return xml;
}

CorpusPaths generate_corpus(const std::filesystem::path& root, const CorpusSpec& spec) {
    namespace fs = std::filesystem;
    CorpusPaths paths;
    paths.binaries_dir = root / "binaries";
    paths.oracle_dir = root / "oracle";
    fs::create_directories(paths.binaries_dir);
    fs::create_directories(paths.oracle_dir);

    std::string tags_joined;
    for (const auto& t : spec.capability_tags) {
        if (!tags_joined.empty()) tags_joined += ",";
        tags_joined += t;
    }

    Rng rng(mix_seed(spec.seed, 0x434f5250 /* "CORP" */));
    std::string sidecar = "filename,source_tag,capability_tags\n";
    std::set<std::string> seen;
    std::size_t produced = 0;
    std::size_t serial = 0;
    while (produced < spec.count) {
        const std::size_t size =
            spec.min_bytes + static_cast<std::size_t>(rng.bounded(spec.max_bytes -
                                                                  spec.min_bytes + 1));
        std::vector<std::byte> blob(size);
        for (auto& b : blob) b = static_cast<std::byte>(rng.bounded(256));
        // Stamp a serial so accidental duplicate blobs cannot occur.
        const std::string stamp = "SYN" + std::to_string(serial++);
        for (std::size_t i = 0; i < stamp.size() && i < blob.size(); ++i)
            blob[i] = static_cast<std::byte>(stamp[i]);

        const std::string md5 = md5_hex(blob);
        if (!seen.insert(md5).second) continue;

        const std::string filename = "bin_" + md5.substr(0, 12) + ".exe";
        write_file_bytes((paths.binaries_dir / filename).string(), blob);
        const std::string row[] = {filename, spec.source_tag, tags_joined};
        sidecar += csv::join_row(row) + "\n";

        write_file_text((paths.oracle_dir / (md5 + ".xml")).string(),
                        oracle_xml_for(md5, spec.model, spec.oracle_source));
        ++produced;
    }
    write_file_text((paths.binaries_dir / "manifest.csv").string(), sidecar);
    return paths;
}

}  // namespace matef
