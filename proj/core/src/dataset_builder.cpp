#include "matef/dataset_builder.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

#include "matef/csv.hpp"
#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

std::set<std::string> repeatability_filter(
    std::span<const std::map<std::string, ObservationRecord>> group_obs, TypeCombo combo,
    RepeatabilityScope scope) {
    if (group_obs.size() != 3)
        throw ConfigError("repeatability_filter: expected exactly 3 observation maps, got " +
                          std::to_string(group_obs.size()));

    std::set<std::string> kept;
    for (const auto& [md5, first] : group_obs[0]) {
        const auto it1 = group_obs[1].find(md5);
        const auto it2 = group_obs[2].find(md5);
        if (it1 == group_obs[1].end() || it2 == group_obs[2].end()) continue;
        const ObservationRecord& second = it1->second;
        const ObservationRecord& third = it2->second;
        if (!first.executed_ok || !second.executed_ok || !third.executed_ok) continue;
        bool same;
        if (scope == RepeatabilityScope::combo) {
            const auto count = first.counts.total(combo);
            same = count == second.counts.total(combo) && count == third.counts.total(combo);
        } else {
            same = first.counts == second.counts && first.counts == third.counts;
        }
        if (same) kept.insert(md5);
    }
    return kept;
}

DatasetBuildResult build_dataset(ArtefactStore& store, std::int64_t group_id, TypeCombo combo,
                                 const std::string& oracle_source, const std::string& dataset_id,
                                 RepeatabilityScope scope) {
    const auto group = store.find_group(group_id);
    if (!group) throw StoreError("build_dataset: unknown group " + std::to_string(group_id));

    const auto obs = store.list_group(group->run_ids);
    const auto repeatable = repeatability_filter(obs, combo, scope);

    DatasetBuildResult result;
    result.meta.dataset_id = dataset_id;
    result.meta.tool_id = group->tool_id;
    result.meta.duration_s = group->duration_s;
    result.meta.combo = combo;
    result.meta.group_id = group_id;
    result.repeatable = repeatable.size();

    for (const auto& md5 : repeatable) {
        const auto expected = store.expected_counts(md5, oracle_source);
        if (!expected) {
            // Expected counts exist only for oracle-covered binaries.
            ++result.dropped_unknown_to_oracle;
            continue;
        }
        DatasetRow row;
        row.md5 = md5;
        row.expected = expected->total(combo);
        row.observed = obs[0].at(md5).counts.total(combo);
        result.rows.push_back(std::move(row));
    }
    std::sort(result.rows.begin(), result.rows.end(),
              [](const DatasetRow& a, const DatasetRow& b) { return a.md5 < b.md5; });

    store.insert_dataset(result.meta, result.rows);
    return result;
}

void export_dataset_files(const ArtefactStore& store, const std::string& dataset_id,
                          const std::filesystem::path& csv_path) {
    const auto meta = store.find_dataset_meta(dataset_id);
    if (!meta) throw StoreError("export_dataset_files: unknown dataset " + dataset_id);

    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path.string());
    store.export_dataset_csv(dataset_id, csv);
    csv.close();

    nlohmann::json j;
    j["dataset_id"] = meta->dataset_id;
    j["tool_id"] = meta->tool_id;
    j["duration_s"] = meta->duration_s;
    j["combo"] = meta->combo.to_string();
    j["lineage_group_id"] = meta->group_id;
    std::filesystem::path meta_path = csv_path;
    meta_path.replace_extension(".meta.json");
    write_file_text(meta_path.string(), j.dump(2) + "\n");
}

std::vector<DatasetRow> load_dataset_csv(const std::filesystem::path& csv_path) {
    const auto rows = csv::parse(read_file_text(csv_path.string()));
    if (rows.empty() || rows[0] != std::vector<std::string>{"md5", "expected", "observed"})
        throw ParseError("dataset CSV: expected header md5,expected,observed", 1);
    std::vector<DatasetRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != 3) throw ParseError("dataset CSV: malformed row", i + 1);
        DatasetRow r;
        r.md5 = row[0];
        try {
            r.expected = std::stoll(row[1]);
            r.observed = std::stoll(row[2]);
        } catch (...) {
            throw ParseError("dataset CSV: non-numeric count", i + 1);
        }
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(),
              [](const DatasetRow& a, const DatasetRow& b) { return a.md5 < b.md5; });
    return out;
}

}  // namespace matef
