#pragma once

// JSON and JSON-lines formats for everything the engine writes besides the
// binary feature store: estimators, score tables, manifests, reports, and
// synthetic specs.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "curation/diversity.hpp"
#include "curation/feature_store.hpp"
#include "curation/kernel_stats.hpp"
#include "curation/proximity_estimator.hpp"
#include "curation/selection.hpp"
#include "curation/synthetic.hpp"

namespace curation::io {

using nlohmann::json;

/// Writes to a sibling temporary, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const json& j);
json to_json(const TrainHistory& history);

json estimator_to_json(const ProximityEstimator& est, const TrainConfig& cfg, const TrainHistory& history);
ProximityEstimator estimator_from_json(const json& j);

/// Header line {"scorer", "direction", "config"} followed by one
/// {"id", "dataset", "value"} line per entry.
std::string score_table_to_jsonl(const ScoreTable& table, const json& config);
ScoreTable read_score_table(const std::filesystem::path& path, json* header_config = nullptr);

/// Header line {"k", "scorer", "direction", "pool_size", "config"} followed by
/// one {"rank", "id", "dataset", "value"} line per entry.
std::string manifest_to_jsonl(const SelectionManifest& manifest);
SelectionManifest read_manifest(const std::filesystem::path& path);

json to_json(const MMDConfig& cfg);
json to_json(const MMDMatrix& matrix, const MMDConfig& cfg);
json to_json(const CompositionReport& report);
json to_json(const Histogram& histogram);
json to_json(const HistogramReport& report);
json to_json(const SummaryStats& stats);
json to_json(const ShiftReport& report);
json to_json(const RecoveryReport& report);
json to_json(const ValidationReport& report);
json to_json(const DiversityConfig& cfg);

json to_json(const MixtureSpec& spec);
MixtureSpec mixture_spec_from_json(const json& j);

struct IngestResult {
    std::vector<FeatureRecord> records;
    std::vector<std::string> aux_names;
};

/// Reads a JSON-lines vector dump: {"id", "dataset", "vector", optional "key",
/// optional "aux": {name: value}}. Aux channel order follows the first record.
IngestResult read_ingest_jsonl(const std::filesystem::path& path);

}  // namespace curation::io
