#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ffd/eval.hpp"
#include "ffd/features.hpp"
#include "ffd/model.hpp"
#include "ffd/synthgen.hpp"

namespace ffd {

struct PipelinePaths {
  std::filesystem::path data = "data";
  std::filesystem::path masks = "masks";
  std::filesystem::path models = "models";
  std::filesystem::path out = "out";
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  PipelinePaths paths;
  double fps = 0.0;  // capture rate for mask manifests; 0 infers it
  PreprocessOptions preprocess;
  EyeFusion eye_fusion = EyeFusion::average;
  nlohmann::json models = nlohmann::json::object();
  std::size_t cv_folds = 5;
  GeneratorConfig generator;
};

PipelineConfig default_pipeline_config();
nlohmann::json to_json(const PipelineConfig& c);
// Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

ModelSpec model_spec(const PipelineConfig& c, Family family);

struct SplitFeatures {
  Baselines baselines;
  std::array<std::vector<FeatureVector>, kNumSplits> features;
  std::size_t skipped = 0;
};

// Baselines from the train split only, then features for every split.
SplitFeatures featurise(const SyntheticDataset& data, const PreprocessOptions& opts, EyeFusion fusion);

struct EvaluationResult {
  ConfusionMatrix cm4;
  ConfusionMatrix cm2;
};

EvaluationResult evaluate_groups(const TrainedModel& model, std::span<const FeatureVector> samples);

}  // namespace ffd
