#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ffd/features.hpp"

namespace ffd {

nlohmann::json to_json(const FeatureVector& fv);
FeatureVector feature_vector_from_json(const nlohmann::json& j);

// One JSON record per line: {"id": ..., "condition": ..., "features": [...]}.
void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& vectors);
std::vector<FeatureVector> read_features(const std::filesystem::path& path);

// Sidecar describing the named slot ranges of the feature vector.
nlohmann::json feature_layout_json();

nlohmann::json to_json(const TimeSeries& s);
TimeSeries time_series_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Baselines& b);
Baselines baselines_from_json(const nlohmann::json& j);
void write_baselines(const std::filesystem::path& path, const Baselines& b);
Baselines read_baselines(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ffd
