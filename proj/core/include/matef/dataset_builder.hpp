#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "matef/store.hpp"

namespace matef {

enum class RepeatabilityScope {
    combo,      // compare combo-scoped counts (default)
    all_types,  // compare the full per-type count vectors
};

/// The repeatability rule: keep a hash iff it executed successfully in
/// all three runs of the group AND produced the same observed count in each.
/// Throws ConfigError unless exactly three observation maps are supplied.
std::set<std::string> repeatability_filter(
    std::span<const std::map<std::string, ObservationRecord>> group_obs, TypeCombo combo,
    RepeatabilityScope scope = RepeatabilityScope::combo);

struct DatasetBuildResult {
    DatasetMeta meta;
    std::vector<DatasetRow> rows;  // ordered by md5
    std::size_t repeatable = 0;
    std::size_t dropped_unknown_to_oracle = 0;
};

/// Builds the (md5, expected, observed) dataset for a stored group: one row
/// per repeatable hash the oracle knows; hashes unknown to the oracle are
/// dropped and counted. An empty result is a warning for the caller, not an
/// error. The dataset is persisted under dataset_id.
DatasetBuildResult build_dataset(ArtefactStore& store, std::int64_t group_id, TypeCombo combo,
                                 const std::string& oracle_source, const std::string& dataset_id,
                                 RepeatabilityScope scope = RepeatabilityScope::combo);

/// Writes the dataset CSV (md5,expected,observed) and a JSON sidecar carrying
/// dataset_id, tool, duration, combo and lineage next to it (<stem>.meta.json).
void export_dataset_files(const ArtefactStore& store, const std::string& dataset_id,
                          const std::filesystem::path& csv_path);

/// Reads a dataset back from its CSV (+ optional sidecar). Returns rows
/// ordered by md5.
std::vector<DatasetRow> load_dataset_csv(const std::filesystem::path& csv_path);

}  // namespace matef
