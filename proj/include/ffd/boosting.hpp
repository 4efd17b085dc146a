#pragma once

#include <cstdint>
#include <vector>

#include "ffd/tree.hpp"

namespace ffd {

struct BoostingParams {
  double learning_rate = 0.01;
  int n_estimators = 1000;
  double subsample = 1.0;
  TreeParams tree{SplitCriterion::squared_error, 5, 10, 5, 0};
};

// Multinomial-deviance gradient boosting: each stage fits one regression tree
// per class to the residuals y_k - p_k, with Newton-step leaf values.
struct BoostingModel {
  int n_classes = 0;
  double learning_rate = 0.01;
  std::vector<double> init;                       // log class priors
  std::vector<std::vector<DecisionTree>> stages;  // [stage][class]
  std::vector<double> train_deviance;             // after each stage

  std::vector<double> raw_scores(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
};

std::vector<double> softmax(std::span<const double> scores);

// Mean negative log-likelihood of the labels under the given probabilities.
double multinomial_deviance(const std::vector<std::vector<double>>& proba, std::span<const int> labels);

BoostingModel fit_boosting(const FeatureMatrix& x, std::span<const int> labels, int n_classes,
                           const BoostingParams& params, std::uint64_t seed);

}  // namespace ffd
