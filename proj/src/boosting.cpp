#include "ffd/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ffd/error.hpp"

namespace ffd {

std::vector<double> softmax(std::span<const double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(scores[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double multinomial_deviance(const std::vector<std::vector<double>>& proba, std::span<const int> labels) {
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    acc -= std::log(std::max(proba[i][static_cast<std::size_t>(labels[i])], 1e-300));
  return acc / static_cast<double>(labels.size());
}

std::vector<double> BoostingModel::raw_scores(std::span<const double> x) const {
  std::vector<double> f = init;
  for (const auto& stage : stages)
    for (std::size_t k = 0; k < stage.size(); ++k) f[k] += learning_rate * stage[k].predict(x)[0];
  return f;
}

std::vector<double> BoostingModel::predict_proba(std::span<const double> x) const {
  return softmax(raw_scores(x));
}

namespace {

double deviance_from_scores(const std::vector<double>& scores, std::size_t k, std::span<const int> labels) {
  const std::size_t n = labels.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* f = scores.data() + i * k;
    const double top = *std::max_element(f, f + k);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += std::exp(f[c] - top);
    acc += top + std::log(sum) - f[static_cast<std::size_t>(labels[i])];
  }
  return acc / static_cast<double>(n);
}

}  // namespace

BoostingModel fit_boosting(const FeatureMatrix& x, std::span<const int> labels, int n_classes,
                           const BoostingParams& params, std::uint64_t seed) {
  const std::size_t n = x.rows;
  const auto k = static_cast<std::size_t>(n_classes);
  if (n == 0) throw InputError("gradient boosting needs at least one sample");
  if (n_classes < 2) throw InputError("gradient boosting needs at least two classes");
  if (!(params.learning_rate > 0)) throw InputError("learning rate must be positive");
  if (!(params.subsample > 0 && params.subsample <= 1.0)) throw InputError("subsample must lie in (0, 1]");

  BoostingModel model;
  model.n_classes = n_classes;
  model.learning_rate = params.learning_rate;

  std::vector<double> prior(k, 0.0);
  for (int y : labels) prior[static_cast<std::size_t>(y)] += 1.0;
  model.init.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (prior[c] == 0.0) throw InputError("gradient boosting got a class without samples");
    model.init[c] = std::log(prior[c] / static_cast<double>(n));
  }

  std::vector<double> scores(n * k);
  for (std::size_t i = 0; i < n; ++i) std::copy(model.init.begin(), model.init.end(), scores.begin() + i * k);

  std::vector<double> proba(n * k), residual(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto in_bag = std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));
  std::vector<std::size_t> bag;
  const double newton_scale = static_cast<double>(k - 1) / static_cast<double>(k);

  model.stages.reserve(static_cast<std::size_t>(params.n_estimators));
  model.train_deviance.reserve(static_cast<std::size_t>(params.n_estimators));
  for (int stage = 0; stage < params.n_estimators; ++stage) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(stage));
    for (std::size_t i = 0; i < n; ++i) {
      auto p = softmax(std::span<const double>(scores.data() + i * k, k));
      std::copy(p.begin(), p.end(), proba.begin() + i * k);
    }
    if (in_bag < n) {
      bag = all;
      std::shuffle(bag.begin(), bag.end(), rng);
      bag.resize(in_bag);
      std::sort(bag.begin(), bag.end());
    } else {
      bag = all;
    }

    std::vector<DecisionTree> trees;
    trees.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = (labels[i] == static_cast<int>(c) ? 1.0 : 0.0) - proba[i * k + c];
      DecisionTree tree = build_regression_tree(x, residual, bag, params.tree, rng);

      std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
      for (std::size_t i : bag) {
        const int leaf = tree.leaf_index(x.row(i));
        const double r = residual[i];
        const double y = labels[i] == static_cast<int>(c) ? 1.0 : 0.0;
        num[static_cast<std::size_t>(leaf)] += r;
        den[static_cast<std::size_t>(leaf)] += (y - r) * (1.0 - y + r);
      }
      for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
        if (!tree.nodes[node].is_leaf()) continue;
        tree.nodes[node].value = {den[node] < 1e-150 ? 0.0 : newton_scale * num[node] / den[node]};
      }
      for (std::size_t i = 0; i < n; ++i) scores[i * k + c] += params.learning_rate * tree.predict(x.row(i))[0];
      trees.push_back(std::move(tree));
    }
    model.stages.push_back(std::move(trees));
    model.train_deviance.push_back(deviance_from_scores(scores, k, labels));
  }
  return model;
}

}  // namespace ffd
