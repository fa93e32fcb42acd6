#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "idcrn/metrics.hpp"
#include "idcrn/trainer.hpp"

namespace idcrn {

nlohmann::json to_json(const TrainConfig& cfg);
/// Fields absent from j keep the values already in base.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json to_json(const EpochLog& e);
nlohmann::json to_json(const ClusteringScores& s);
nlohmann::json to_json(const MetricsReport& r);

/// One JSON object per line, one line per epoch.
void write_epoch_log(const std::vector<EpochLog>& epochs, const std::filesystem::path& path);

/// Scores, config and per-run results. Contains nothing that varies between
/// identical runs (no timings, no paths), so reruns produce identical bytes.
void write_metrics(const std::filesystem::path& path, const TrainConfig& cfg,
                   const std::vector<std::uint64_t>& seeds, const std::vector<ClusteringScores>& runs);

/// "node,cluster" rows.
void write_predictions(const Labels& predictions, const std::filesystem::path& path);

/// One integer per line, or a "node,label" CSV; header lines are skipped.
Labels read_labels(const std::filesystem::path& path);

std::string dump_json(const nlohmann::json& j);

}  // namespace idcrn
