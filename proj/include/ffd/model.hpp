#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ffd/boosting.hpp"
#include "ffd/core.hpp"
#include "ffd/features.hpp"
#include "ffd/forest.hpp"
#include "ffd/mlp.hpp"

namespace ffd {

enum class Family { random_forest, gradient_boosting, mlp };

inline constexpr std::array<Family, 3> kFamilies = {Family::random_forest, Family::gradient_boosting,
                                                    Family::mlp};

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

using ParamValue = std::variant<bool, std::int64_t, double, std::string, std::vector<std::int64_t>>;
using Hyperparameters = std::map<std::string, ParamValue>;

std::string describe(const ParamValue& v);

struct ModelSpec {
  Family family = Family::random_forest;
  Hyperparameters params;
  std::uint64_t seed = 0;

  bool operator==(const ModelSpec&) const = default;
};

// Defaults are the tuned settings of the three model tables:
//   random_forest: 1000 trees, entropy, depth 5, min split 5, min leaf 3, max_features auto
//   gradient_boosting: deviance, lr 0.01, 1000 stages, subsample 1.0, squared_error,
//                      min split 10, min leaf 5, depth 5, max_features auto
//   mlp: (25, 10) relu, adam, alpha 1e-5, batch auto, constant lr 1e-3, 300 iterations
ModelSpec default_spec(Family family, std::uint64_t seed = 0);

// Throws InputError if a key is unknown for the family or has the wrong type.
void validate(const ModelSpec& spec);

// Resolves "auto"/"sqrt"/"log2"/"all", integer counts and fractions.
std::size_t resolve_max_features(const ParamValue& v, std::size_t n_features);

ForestParams forest_params(const ModelSpec& spec, std::size_t n_features);
BoostingParams boosting_params(const ModelSpec& spec, std::size_t n_features);
MlpParams mlp_params(const ModelSpec& spec);

enum class Split { train, validation, test };
std::string_view to_string(Split s);

struct Dataset {
  std::vector<FeatureVector> samples;
  Split split = Split::train;
};

struct Prediction {
  Condition condition = Condition::control;
  std::array<double, kNumConditions> probabilities{};
  double fit_probability = 0.0;

  double unfit_score() const { return 1.0 - fit_probability; }
  FitClass fit_class() const { return ffd::fit_class(condition); }
};

// Argmax with ties resolved in class order control < alcohol < drug < sleep.
Prediction make_prediction(const std::array<double, kNumConditions>& probabilities);

using ModelImpl = std::variant<ForestModel, BoostingModel, MlpModel>;

class TrainedModel {
 public:
  TrainedModel(ModelSpec spec, std::vector<Condition> classes, std::size_t n_features, std::size_t n_train,
               ModelImpl impl);

  const ModelSpec& spec() const { return spec_; }
  // Conditions seen in training, in class order; absent ones get probability 0.
  const std::vector<Condition>& classes() const { return classes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_train() const { return n_train_; }
  const ModelImpl& impl() const { return impl_; }

  std::array<double, kNumConditions> predict_proba(std::span<const double> x) const;
  Prediction predict(std::span<const double> x) const;
  Prediction predict(const FeatureVector& fv) const { return predict(fv.values); }

 private:
  ModelSpec spec_;
  std::vector<Condition> classes_;
  std::size_t n_features_;
  std::size_t n_train_;
  ModelImpl impl_;
};

TrainedModel train(const ModelSpec& spec, std::span<const FeatureVector> samples);
inline TrainedModel train(const ModelSpec& spec, const Dataset& data) { return train(spec, data.samples); }

}  // namespace ffd
