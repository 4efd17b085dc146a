#include "ffd/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ffd/error.hpp"
#include "ffd/random.hpp"

namespace ffd {

std::vector<std::size_t> stratified_folds(std::span<const FeatureVector> samples, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InputError("k-fold cross-validation needs k >= 2");
  std::array<std::vector<std::size_t>, kNumConditions> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[index_of(samples[i].condition)].push_back(i);
  std::vector<std::size_t> fold(samples.size(), 0);
  std::size_t next = 0;
  for (Condition c : kConditions) {
    auto& members = by_class[index_of(c)];
    if (members.empty()) continue;
    if (members.size() < k)
      throw InputError(fmt::format("class '{}' has {} samples, fewer than the {} folds", to_string(c), members.size(), k));
    Rng rng = make_rng(seed, index_of(c));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) fold[i] = next++ % k;
  }
  return fold;
}

ConfusionMatrix evaluate(const TrainedModel& model, std::span<const FeatureVector> samples) {
  std::vector<LabelPair> pairs;
  pairs.reserve(samples.size());
  for (const FeatureVector& fv : samples) pairs.emplace_back(fv.condition, model.predict(fv).condition);
  return confusion_matrix(pairs);
}

CvResult kfold_cv(const ModelSpec& spec, const Dataset& data, std::size_t k) {
  if (data.samples.empty()) throw InputError("cross-validation on an empty dataset");
  const std::vector<std::size_t> fold = stratified_folds(data.samples, k, spec.seed);
  CvResult out;
  for (const FeatureVector& fv : data.samples) out.class_present[index_of(fv.condition)] = true;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<FeatureVector> train_part, test_part;
    FoldResult r;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      if (fold[i] == f) {
        test_part.push_back(data.samples[i]);
        r.test_indices.push_back(i);
      } else {
        train_part.push_back(data.samples[i]);
      }
    }
    const TrainedModel model = train(spec, train_part);
    r.confusion = evaluate(model, test_part);
    r.accuracy = overall_accuracy(r.confusion);
    for (Condition c : kConditions) r.sensitivity[index_of(c)] = class_metrics(r.confusion, index_of(c)).sensitivity;
    out.folds.push_back(std::move(r));
  }
  const auto kd = static_cast<double>(k);
  auto mean_std = [&](auto get) {
    double mean = 0.0;
    for (const FoldResult& r : out.folds) mean += get(r);
    mean /= kd;
    double var = 0.0;
    for (const FoldResult& r : out.folds) var += (get(r) - mean) * (get(r) - mean);
    return std::pair{mean, std::sqrt(var / kd)};
  };
  std::tie(out.mean_accuracy, out.std_accuracy) = mean_std([](const FoldResult& r) { return r.accuracy; });
  for (std::size_t c = 0; c < kNumConditions; ++c)
    std::tie(out.mean_sensitivity[c], out.std_sensitivity[c]) =
        mean_std([c](const FoldResult& r) { return r.sensitivity[c]; });
  return out;
}

std::vector<ModelSpec> expand_grid(const ModelSpec& base, const ParamGrid& grid) {
  if (grid.empty()) throw InputError("grid search needs at least one hyperparameter");
  std::vector<ModelSpec> specs{base};
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw InputError(fmt::format("grid entry '{}' has no values", key));
    std::vector<ModelSpec> next;
    next.reserve(specs.size() * values.size());
    for (const ModelSpec& s : specs)
      for (const ParamValue& v : values) {
        ModelSpec copy = s;
        copy.params[key] = v;
        next.push_back(std::move(copy));
      }
    specs = std::move(next);
  }
  for (const ModelSpec& s : specs) validate(s);
  return specs;
}

GridSearchResult grid_search(const ModelSpec& base, const ParamGrid& grid, const Dataset& train_set,
                             const Dataset& val, const std::function<void(const ModelSpec&)>& on_fit) {
  if (val.samples.empty()) throw InputError("grid search needs a non-empty validation set");
  GridSearchResult out;
  bool have = false;
  for (const ModelSpec& spec : expand_grid(base, grid)) {
    const TrainedModel model = train(spec, train_set);
    if (on_fit) on_fit(spec);
    const double score = macro_precision(evaluate(model, val.samples));
    out.evaluated.emplace_back(spec, score);
    if (!have || score > out.best_score) {
      out.best = spec;
      out.best_score = score;
      have = true;
    }
  }
  return out;
}

}  // namespace ffd
