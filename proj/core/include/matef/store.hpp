#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "matef/artefact_types.hpp"

namespace matef {

struct SampleRecord {
    std::string md5;
    std::string sha256;
    std::uint64_t byte_size = 0;
    std::string source_tag;
    std::set<std::string> capability_tags;
    std::string ingested_at;  // ISO-8601 UTC

    bool operator==(const SampleRecord&) const = default;
};

struct TestRecord {
    std::int64_t test_id = 0;
    std::string tool_id;
    std::int64_t duration_s = 0;
    std::string dataset_lineage;  // "Random" or a prior test_id rendered as text
    std::string started_at;
};

/// Per-type distinct-label counts.
struct TypeCounts {
    std::array<std::int64_t, 5> by_type{};

    std::int64_t& operator[](ArtefactType t) { return by_type[static_cast<std::size_t>(t)]; }
    std::int64_t operator[](ArtefactType t) const { return by_type[static_cast<std::size_t>(t)]; }

    std::int64_t total(TypeCombo combo) const {
        std::int64_t sum = 0;
        for (ArtefactType t : kAllArtefactTypes)
            if (combo.contains(t)) sum += (*this)[t];
        return sum;
    }

    bool operator==(const TypeCounts&) const = default;
};

struct ObservationRecord {
    std::int64_t test_id = 0;
    std::string md5;
    TypeCounts counts;  // all zero whenever executed_ok is false
    bool executed_ok = false;
    std::string log_ref;  // opaque locator, empty when no log exists

    bool operator==(const ObservationRecord&) const = default;
};

struct GroupRecord {
    std::int64_t group_id = 0;
    std::string tool_id;
    std::int64_t duration_s = 0;
    int guest_count = 0;
    std::int64_t stagger_s = 0;
    std::uint64_t seed = 0;
    std::array<std::int64_t, 3> run_ids{};
    std::vector<std::string> sample;  // the shared hash list
    std::string created_at;
};

struct DatasetRow {
    std::string md5;
    std::int64_t expected = 0;
    std::int64_t observed = 0;

    bool operator==(const DatasetRow&) const = default;
};

struct DatasetMeta {
    std::string dataset_id;
    std::string tool_id;
    std::int64_t duration_s = 0;
    TypeCombo combo = TypeCombo::port_only();
    std::int64_t group_id = 0;
};

struct AnalysisResultRow {
    std::string label;        // e.g. "1.1"
    std::string description;  // e.g. "1m vs 10s"
    std::string hypothesis;   // "H1" / "H2"
    std::string dataset_a;
    std::string dataset_b;
    double r = 0, z = 0, se = 0, t = 0, p = 0;
    std::int64_t n = 0;
    std::int64_t n_effective = 0;
    std::string decision;  // "reject" / "retain"
    double alpha = 0.05;
    std::string outlier_method;
    std::string created_at;
};

/// Single-file embedded store housing the malware artefact database.
///
/// Exactly one writer process at a time (enforced with an exclusive lock
/// taken at open); any number of concurrent readers. Writer commits are
/// atomic: readers never observe partial records.
class ArtefactStore {
public:
    enum class Mode { read_write, read_only };

    /// Opens (creating schema if absent in read_write mode). Throws StoreError
    /// on lock conflict ("another writer holds ...") or integrity failure.
    explicit ArtefactStore(const std::filesystem::path& path, Mode mode = Mode::read_write);
    ~ArtefactStore();

    ArtefactStore(ArtefactStore&&) noexcept;
    ArtefactStore& operator=(ArtefactStore&&) noexcept;
    ArtefactStore(const ArtefactStore&) = delete;
    ArtefactStore& operator=(const ArtefactStore&) = delete;

    const std::filesystem::path& path() const;

    /// Groups many writes into one atomic commit. Re-entrant calls nest.
    void begin_batch();
    void commit_batch();

    // --- samples ---------------------------------------------------------
    /// Returns false when the md5 already exists (idempotent ingest).
    bool insert_sample(const SampleRecord& rec, std::span<const std::byte> content);
    std::optional<SampleRecord> find_sample(const std::string& md5) const;
    std::vector<std::byte> sample_content(const std::string& md5) const;
    std::vector<SampleRecord> list_samples() const;  // ordered by md5
    std::vector<std::string> hashes_with_tag(const std::string& tag) const;
    std::size_t sample_count() const;

    // --- oracle ----------------------------------------------------------
    /// Replaces any prior report for (md5, source). Returns false when the
    /// stored fingerprint already matches (idempotent re-ingest, no change).
    bool upsert_oracle_report(const std::string& md5, const std::string& source_id,
                              const std::map<ArtefactType, std::set<std::string>>& labels,
                              const std::string& fingerprint, const std::string& received_at);
    bool oracle_has(const std::string& md5, const std::string& source_id) const;
    std::optional<TypeCounts> expected_counts(const std::string& md5,
                                              const std::string& source_id) const;
    std::map<ArtefactType, std::set<std::string>> oracle_labels(const std::string& md5,
                                                                const std::string& source_id) const;
    std::vector<std::string> oracle_sources() const;
    std::size_t oracle_report_count() const;

    // --- tests and observations ------------------------------------------
    std::int64_t insert_test(const std::string& tool_id, std::int64_t duration_s,
                             const std::string& dataset_lineage, const std::string& started_at);
    std::optional<TestRecord> find_test(std::int64_t test_id) const;
    std::vector<TestRecord> list_tests() const;  // ordered by test_id

    /// Throws StoreError on unknown test_id or duplicate (test_id, md5).
    void record_observation(const ObservationRecord& rec);
    std::map<std::string, ObservationRecord> observations_for(std::int64_t test_id) const;

    /// Complete per-test observation maps for a run group; throws on missing id.
    std::array<std::map<std::string, ObservationRecord>, 3> list_group(
        const std::array<std::int64_t, 3>& test_ids) const;

    // --- groups ------------------------------------------------------------
    std::int64_t insert_group(const GroupRecord& rec);  // returns group_id
    std::optional<GroupRecord> find_group(std::int64_t group_id) const;
    std::vector<GroupRecord> list_groups() const;

    // --- datasets ----------------------------------------------------------
    void insert_dataset(const DatasetMeta& meta, std::span<const DatasetRow> rows);
    std::optional<DatasetMeta> find_dataset_meta(const std::string& dataset_id) const;
    std::vector<DatasetRow> dataset_rows(const std::string& dataset_id) const;  // by md5
    std::vector<DatasetMeta> list_datasets() const;

    // --- analysis results ----------------------------------------------------
    void insert_analysis_result(const AnalysisResultRow& row);
    std::vector<AnalysisResultRow> list_analysis_results() const;

    // --- exports -------------------------------------------------------------
    /// CSV `md5,expected,observed`, rows ordered by md5.
    void export_dataset_csv(const std::string& dataset_id, std::ostream& out) const;
    /// CSV `test_id,md5,type,count,executed_ok`.
    void export_observations_csv(std::int64_t test_id, std::ostream& out) const;
    /// CSV `md5,byte_size,source_tag,capability_tags,ingested_at`.
    void export_library_csv(std::ostream& out) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace matef
