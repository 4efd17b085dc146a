#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ffd/eval.hpp"
#include "ffd/model.hpp"

namespace ffd {

// Fold id per sample. Each class is shuffled with the seed and dealt
// round-robin, continuing the fold counter across classes, so fold sizes
// differ by at most one.
std::vector<std::size_t> stratified_folds(std::span<const FeatureVector> samples, std::size_t k, std::uint64_t seed);

struct FoldResult {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::array<double, kNumConditions> sensitivity{};
  std::vector<std::size_t> test_indices;
};

struct CvResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::array<double, kNumConditions> mean_sensitivity{};
  std::array<double, kNumConditions> std_sensitivity{};
  std::array<bool, kNumConditions> class_present{};
};

CvResult kfold_cv(const ModelSpec& spec, const Dataset& data, std::size_t k = 5);

// Keys are visited in lexicographic order, the first key varying slowest.
using ParamGrid = std::map<std::string, std::vector<ParamValue>>;

struct GridSearchResult {
  ModelSpec best;
  double best_score = 0.0;
  std::vector<std::pair<ModelSpec, double>> evaluated;
};

std::vector<ModelSpec> expand_grid(const ModelSpec& base, const ParamGrid& grid);

// Exhaustive search maximising macro-averaged precision on `val`; ties keep
// the earliest combination. on_fit is called once per trained model.
GridSearchResult grid_search(const ModelSpec& base, const ParamGrid& grid, const Dataset& train, const Dataset& val,
                             const std::function<void(const ModelSpec&)>& on_fit = {});

ConfusionMatrix evaluate(const TrainedModel& model, std::span<const FeatureVector> samples);

}  // namespace ffd
