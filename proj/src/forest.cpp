#include "ffd/forest.hpp"

#include <numeric>

#include "ffd/error.hpp"

namespace ffd {

std::vector<double> ForestModel::predict_proba(std::span<const double> x) const {
  std::vector<double> p(static_cast<std::size_t>(n_classes), 0.0);
  for (const DecisionTree& t : trees) {
    const std::vector<double>& leaf = t.predict(x);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += leaf[k];
  }
  for (double& v : p) v /= static_cast<double>(trees.size());
  return p;
}

ForestModel fit_forest(const FeatureMatrix& x, std::span<const int> labels, int n_classes,
                       const ForestParams& params, std::uint64_t seed) {
  if (x.rows == 0) throw InputError("random forest needs at least one sample");
  if (params.n_estimators < 1) throw InputError("random forest needs at least one estimator");
  ForestModel model;
  model.n_classes = n_classes;
  model.trees.reserve(static_cast<std::size_t>(params.n_estimators));
  std::vector<std::size_t> idx(x.rows);
  for (int t = 0; t < params.n_estimators; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, x.rows - 1);
      for (std::size_t& i : idx) i = pick(rng);
    } else {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    model.trees.push_back(build_classification_tree(x, labels, n_classes, idx, params.tree, rng));
  }
  return model;
}

}  // namespace ffd
