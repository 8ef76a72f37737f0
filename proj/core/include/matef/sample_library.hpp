#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "matef/store.hpp"

namespace matef {

/// Per-guest queue of binaries assigned from a sample partition.
struct InTray {
    int guest_index = 0;
    std::vector<std::string> hashes;
};

/// Splits hashes across guest_count trays: sizes differ by at most one, the
/// remainder goes to the lowest guest indices, and concatenating the trays
/// reproduces the input order. Throws ConfigError when guest_count < 1.
std::vector<InTray> partition_in_trays(const std::vector<std::string>& hashes, int guest_count);

/// Hash-keyed malware library over the artefact store.
class SampleLibrary {
public:
    explicit SampleLibrary(ArtefactStore& store) : store_(store) {}

    /// Ingests a binary; keyed by MD5 of the content, so re-ingesting
    /// identical bytes returns the existing record unchanged.
    /// Throws ConfigError on empty input.
    SampleRecord ingest_binary(std::span<const std::byte> bytes, const std::string& source_tag,
                               const std::set<std::string>& capability_tags);

    /// Uniform random sample without replacement from the tagged population;
    /// deterministic for a fixed seed. Throws ConfigError naming the
    /// shortfall when count exceeds the tagged population.
    std::vector<std::string> select_sample(const std::string& tag, std::size_t count,
                                           std::uint64_t seed) const;

    ArtefactStore& store() { return store_; }

private:
    ArtefactStore& store_;
};

struct IngestSummary {
    std::size_t ingested = 0;
    std::size_t duplicates = 0;
    std::size_t skipped = 0;  // empty or unreadable files
    std::map<std::string, std::size_t> per_tag;
    std::vector<std::string> problems;
};

/// Ingests every regular file in a directory. An optional sidecar manifest
/// (CSV: filename, source_tag, comma-joined capability tags) overrides the
/// defaults per file; files not listed use default_source/default_tags.
/// The sidecar file itself is never ingested.
IngestSummary ingest_directory(SampleLibrary& library, const std::filesystem::path& dir,
                               const std::optional<std::filesystem::path>& sidecar_csv,
                               const std::string& default_source,
                               const std::set<std::string>& default_tags);

}  // namespace matef
