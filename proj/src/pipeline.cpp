#include "ffd/pipeline.hpp"

#include <fmt/format.h>

#include "ffd/error.hpp"
#include "ffd/feature_io.hpp"
#include "ffd/model_io.hpp"
#include "ffd/validation.hpp"

namespace ffd {

using nlohmann::json;

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.models = default_models_config();
  c.generator = default_generator_config();
  c.generator.seed = c.seed;
  return c;
}

json to_json(const PipelineConfig& c) {
  json gen = to_json(c.generator);
  gen.erase("seed");
  return json{{"seed", c.seed},
              {"paths",
               {{"data", c.paths.data.string()},
                {"masks", c.paths.masks.string()},
                {"models", c.paths.models.string()},
                {"out", c.paths.out.string()}}},
              {"core",
               {{"fps", c.fps},
                {"target_len", c.preprocess.target_len},
                {"max_gap", c.preprocess.max_gap},
                {"max_invalid_fraction", c.preprocess.max_invalid_fraction}}},
              {"features", {{"eye_fusion", to_string(c.eye_fusion)}}},
              {"models", c.models},
              {"cv_folds", c.cv_folds},
              {"generator", gen}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, std::string_view section) {
  if (!j.is_object()) throw SchemaError(fmt::format("config section '{}' must be an object", section));
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw SchemaError(fmt::format("unknown config key '{}' in section '{}'", key, section));
  }
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c = default_pipeline_config();
  reject_unknown(j, {"seed", "paths", "core", "features", "models", "cv_folds", "generator"}, "top level");
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("paths")) {
      const json& p = j["paths"];
      reject_unknown(p, {"data", "masks", "models", "out"}, "paths");
      if (p.contains("data")) c.paths.data = p["data"].get<std::string>();
      if (p.contains("masks")) c.paths.masks = p["masks"].get<std::string>();
      if (p.contains("models")) c.paths.models = p["models"].get<std::string>();
      if (p.contains("out")) c.paths.out = p["out"].get<std::string>();
    }
    if (j.contains("core")) {
      const json& k = j["core"];
      reject_unknown(k, {"fps", "target_len", "max_gap", "max_invalid_fraction"}, "core");
      if (k.contains("fps")) c.fps = k["fps"].get<double>();
      if (k.contains("target_len")) c.preprocess.target_len = k["target_len"].get<std::size_t>();
      if (k.contains("max_gap")) c.preprocess.max_gap = k["max_gap"].get<std::size_t>();
      if (k.contains("max_invalid_fraction"))
        c.preprocess.max_invalid_fraction = k["max_invalid_fraction"].get<double>();
    }
    if (j.contains("features")) {
      reject_unknown(j["features"], {"eye_fusion"}, "features");
      if (j["features"].contains("eye_fusion"))
        c.eye_fusion = parse_eye_fusion(j["features"]["eye_fusion"].get<std::string>());
    }
    if (j.contains("models")) {
      reject_unknown(j["models"], {"random_forest", "gradient_boosting", "mlp"}, "models");
      for (const auto& [key, value] : j["models"].items()) c.models[key] = value;
    }
    if (j.contains("cv_folds")) c.cv_folds = j["cv_folds"].get<std::size_t>();
    if (j.contains("generator")) c.generator = generator_config_from_json(j["generator"]);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed config: {}", e.what()));
  }
  if (!j.contains("generator") || !j["generator"].contains("seed")) c.generator.seed = c.seed;
  if (c.preprocess.target_len < 2) throw InputError("core.target_len must be at least 2");
  if (!(c.preprocess.max_invalid_fraction >= 0 && c.preprocess.max_invalid_fraction <= 1))
    throw InputError("core.max_invalid_fraction must lie in [0, 1]");
  if (c.cv_folds < 2) throw InputError("cv_folds must be at least 2");
  for (Family f : kFamilies) validate(model_spec(c, f));
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_json(read_json_file(path));
}

ModelSpec model_spec(const PipelineConfig& c, Family family) {
  return spec_from_config(c.models, family, c.seed);
}

SplitFeatures featurise(const SyntheticDataset& data, const PreprocessOptions& opts, EyeFusion fusion) {
  SplitFeatures out;
  out.baselines = build_baselines(data[Split::train], opts);
  for (Split s : kSplits) {
    ExtractionResult r = extract_features(data[s], out.baselines, opts, fusion);
    out.skipped += r.skipped.size();
    out.features[static_cast<std::size_t>(s)] = std::move(r.vectors);
  }
  return out;
}

EvaluationResult evaluate_groups(const TrainedModel& model, std::span<const FeatureVector> samples) {
  EvaluationResult r;
  r.cm4 = evaluate(model, samples);
  r.cm2 = group_fit_unfit(r.cm4);
  return r;
}

}  // namespace ffd
