#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ffd/random.hpp"

namespace ffd {

// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

enum class SplitCriterion { entropy, gini, squared_error };

SplitCriterion parse_criterion(std::string_view s);
std::string_view to_string(SplitCriterion c);

struct TreeParams {
  SplitCriterion criterion = SplitCriterion::entropy;
  int max_depth = 5;  // < 0: unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 or >= n_features: every feature, in index order
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaf payload: class fractions (classification) or a single value.
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
};

// Binary CART tree; samples with x[feature] <= threshold go left.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  int leaf_index(std::span<const double> x) const;
  const std::vector<double>& predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
  int depth() const;
};

// sample_index may repeat entries (bootstrap draws count with multiplicity).
DecisionTree build_classification_tree(const FeatureMatrix& x, std::span<const int> labels, int n_classes,
                                       std::span<const std::size_t> sample_index, const TreeParams& params,
                                       Rng& rng);

DecisionTree build_regression_tree(const FeatureMatrix& x, std::span<const double> target,
                                   std::span<const std::size_t> sample_index, const TreeParams& params,
                                   Rng& rng);

}  // namespace ffd
