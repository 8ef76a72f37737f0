#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "matef/sim_model.hpp"

namespace matef {

/// Parameters for the synthetic desk-scale corpus: binary blobs plus matching
/// oracle reports derived from the same generative model the simulated
/// sandbox replays.
struct CorpusSpec {
    std::size_t count = 240;
    std::uint64_t seed = 1;
    std::string source_tag = "synthetic";
    std::set<std::string> capability_tags = {"network_artefacts"};
    std::string oracle_source = "sim-oracle";
    SimModelParams model;
    std::size_t min_bytes = 64;
    std::size_t max_bytes = 2048;
};

struct CorpusPaths {
    std::filesystem::path binaries_dir;  // contains the blobs + manifest.csv sidecar
    std::filesystem::path oracle_dir;    // one oracle XML per binary
};

/// Oracle XML document for a binary: its saturated intrinsic label sets.
std::string oracle_xml_for(const std::string& md5, const SimModelParams& model,
                           const std::string& source_id);

/// Writes `count` binaries under root/binaries (with a sidecar manifest.csv)
/// and matching oracle XML documents under root/oracle.
CorpusPaths generate_corpus(const std::filesystem::path& root, const CorpusSpec& spec);

}  // namespace matef
