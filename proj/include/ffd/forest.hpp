#pragma once

#include <cstdint>
#include <vector>

#include "ffd/tree.hpp"

namespace ffd {

struct ForestParams {
  int n_estimators = 1000;
  TreeParams tree;
  bool bootstrap = true;
};

// Bagged CART trees; probabilities are the mean of the leaf class fractions.
struct ForestModel {
  int n_classes = 0;
  std::vector<DecisionTree> trees;

  std::vector<double> predict_proba(std::span<const double> x) const;
};

// Labels are 0..n_classes-1. Tree i draws from stream (seed, i).
ForestModel fit_forest(const FeatureMatrix& x, std::span<const int> labels, int n_classes,
                       const ForestParams& params, std::uint64_t seed);

}  // namespace ffd
