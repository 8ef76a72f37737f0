#include "matef/sample_library.hpp"

#include <algorithm>

#include "matef/csv.hpp"
#include "matef/digest.hpp"
#include "matef/errors.hpp"
#include "matef/rng.hpp"
#include "matef/util.hpp"

namespace matef {

std::vector<InTray> partition_in_trays(const std::vector<std::string>& hashes, int guest_count) {
    if (guest_count < 1) throw ConfigError("partition_in_trays: guest_count must be >= 1");
    const std::size_t n = hashes.size();
    const std::size_t guests = static_cast<std::size_t>(guest_count);
    const std::size_t base = n / guests;
    const std::size_t remainder = n % guests;

    std::vector<InTray> trays;
    trays.reserve(guests);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < guests; ++g) {
        const std::size_t size = base + (g < remainder ? 1 : 0);
        InTray tray;
        tray.guest_index = static_cast<int>(g);
        tray.hashes.assign(hashes.begin() + static_cast<std::ptrdiff_t>(pos),
                           hashes.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
        trays.push_back(std::move(tray));
    }
    return trays;
}

SampleRecord SampleLibrary::ingest_binary(std::span<const std::byte> bytes,
                                          const std::string& source_tag,
                                          const std::set<std::string>& capability_tags) {
    if (bytes.empty()) throw ConfigError("ingest_binary: empty input rejected");
    SampleRecord rec;
    rec.md5 = md5_hex(bytes);
    rec.sha256 = sha256_hex(bytes);
    rec.byte_size = bytes.size();
    rec.source_tag = source_tag;
    rec.capability_tags = capability_tags;
    rec.ingested_at = utc_now_iso8601();
    if (!store_.insert_sample(rec, bytes)) {
        // Already present: identical bytes, return the stored record unchanged.
        return *store_.find_sample(rec.md5);
    }
    return rec;
}

std::vector<std::string> SampleLibrary::select_sample(const std::string& tag, std::size_t count,
                                                      std::uint64_t seed) const {
    std::vector<std::string> population = store_.hashes_with_tag(tag);
    if (population.size() < count)
        throw ConfigError("select_sample: tag '" + tag + "' has " +
                          std::to_string(population.size()) + " binaries, " +
                          std::to_string(count) + " requested (short by " +
                          std::to_string(count - population.size()) + ")");
    // Partial Fisher-Yates over the md5-sorted population; draws use only
    // pinned mt19937_64 output so the sample is identical across platforms.
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(
                                      rng.bounded(static_cast<std::uint64_t>(population.size() - i)));
        std::swap(population[i], population[j]);
    }
    population.resize(count);
    return population;
}

IngestSummary ingest_directory(SampleLibrary& library, const std::filesystem::path& dir,
                               const std::optional<std::filesystem::path>& sidecar_csv,
                               const std::string& default_source,
                               const std::set<std::string>& default_tags) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("ingest: not a directory: " + dir.string());

    struct FileMeta {
        std::string source;
        std::set<std::string> tags;
    };
    std::map<std::string, FileMeta> sidecar;
    fs::path sidecar_path;
    if (sidecar_csv) {
        sidecar_path = *sidecar_csv;
    } else if (fs::exists(dir / "manifest.csv")) {
        sidecar_path = dir / "manifest.csv";
    }
    if (!sidecar_path.empty()) {
        const auto rows = csv::parse(read_file_text(sidecar_path.string()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (row.empty() || (i == 0 && row[0] == "filename")) continue;
            if (row.size() < 2)
                throw ParseError("sidecar manifest row needs filename,source_tag[,tags]", i + 1);
            FileMeta meta;
            meta.source = row[1];
            if (row.size() >= 3)
                for (const auto& t : split(row[2], ','))
                    if (!trim(t).empty()) meta.tags.insert(trim(t));
            sidecar[row[0]] = std::move(meta);
        }
    }

    IngestSummary summary;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        if (!sidecar_path.empty() && fs::equivalent(path, sidecar_path)) continue;
        const std::string name = path.filename().string();
        std::string source = default_source;
        std::set<std::string> tags = default_tags;
        if (const auto it = sidecar.find(name); it != sidecar.end()) {
            source = it->second.source;
            tags = it->second.tags;
        }
        std::vector<std::byte> bytes;
        try {
            bytes = read_file_bytes(path.string());
        } catch (const Error& e) {
            ++summary.skipped;
            summary.problems.push_back(name + ": " + e.what());
            continue;
        }
        if (bytes.empty()) {
            ++summary.skipped;
            summary.problems.push_back(name + ": empty file");
            continue;
        }
        const bool existed = library.store().find_sample(md5_hex(bytes)).has_value();
        library.ingest_binary(bytes, source, tags);
        if (existed) {
            ++summary.duplicates;
        } else {
            ++summary.ingested;
            for (const auto& t : tags) ++summary.per_tag[t];
        }
    }
    return summary;
}

}  // namespace matef
