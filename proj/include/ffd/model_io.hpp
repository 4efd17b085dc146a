#pragma once

#include <filesystem>

#include "json.hpp"

#include "ffd/model.hpp"

namespace ffd {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const ParamValue& v);
ParamValue param_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelSpec& spec);
// Accepts {"family", "seed", "params"}; unspecified hyperparameters take the
// family defaults.
ModelSpec spec_from_json(const nlohmann::json& j);

// Spec for `family` from a config section {"random_forest": {...}, ...};
// a missing section yields the defaults.
ModelSpec spec_from_config(const nlohmann::json& models_section, Family family, std::uint64_t seed);

// Default model configuration file content.
nlohmann::json default_models_config();

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace ffd
