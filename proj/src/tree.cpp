#include "ffd/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

SplitCriterion parse_criterion(std::string_view s) {
  if (s == "entropy") return SplitCriterion::entropy;
  if (s == "gini") return SplitCriterion::gini;
  if (s == "squared_error") return SplitCriterion::squared_error;
  throw InputError(fmt::format("unknown split criterion '{}'", s));
}

std::string_view to_string(SplitCriterion c) {
  switch (c) {
    case SplitCriterion::entropy: return "entropy";
    case SplitCriterion::gini: return "gini";
    case SplitCriterion::squared_error: return "squared_error";
  }
  return "?";
}

int DecisionTree::leaf_index(std::span<const double> x) const {
  int i = 0;
  while (!nodes[i].is_leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return i;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return best;
}

namespace {

// Class-count statistics. Scores are n * impurity, so lower is better.
class ClassPolicy {
 public:
  using Stats = std::vector<long>;

  ClassPolicy(std::span<const int> labels, int n_classes, SplitCriterion c, std::size_t max_n)
      : labels_(labels), k_(n_classes), criterion_(c), xlogx_(max_n + 1, 0.0) {
    for (std::size_t i = 1; i <= max_n; ++i) xlogx_[i] = static_cast<double>(i) * std::log2(static_cast<double>(i));
  }

  Stats empty() const { return Stats(static_cast<std::size_t>(k_), 0); }
  void add(Stats& s, std::size_t sample) const { ++s[static_cast<std::size_t>(labels_[sample])]; }
  void remove(Stats& s, std::size_t sample) const { --s[static_cast<std::size_t>(labels_[sample])]; }

  double score(const Stats& s, long n) const {
    if (n == 0) return 0.0;
    if (criterion_ == SplitCriterion::gini) {
      double sq = 0.0;
      for (long c : s) sq += static_cast<double>(c) * static_cast<double>(c);
      return static_cast<double>(n) - sq / static_cast<double>(n);
    }
    double acc = xlogx_[static_cast<std::size_t>(n)];
    for (long c : s) acc -= xlogx_[static_cast<std::size_t>(c)];
    return acc;
  }

  bool pure(const Stats& s, long n) const {
    return std::any_of(s.begin(), s.end(), [n](long c) { return c == n; });
  }

  std::vector<double> leaf(const Stats& s, long n) const {
    std::vector<double> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = static_cast<double>(s[i]) / static_cast<double>(n);
    return v;
  }

 private:
  std::span<const int> labels_;
  int k_;
  SplitCriterion criterion_;
  std::vector<double> xlogx_;
};

class RegressionPolicy {
 public:
  struct Stats {
    double sum = 0.0;
    double sumsq = 0.0;
  };

  explicit RegressionPolicy(std::span<const double> target) : target_(target) {}

  Stats empty() const { return {}; }
  void add(Stats& s, std::size_t sample) const {
    s.sum += target_[sample];
    s.sumsq += target_[sample] * target_[sample];
  }
  void remove(Stats& s, std::size_t sample) const {
    s.sum -= target_[sample];
    s.sumsq -= target_[sample] * target_[sample];
  }

  // Only the -sum^2/n part varies between candidate splits of one node.
  double score(const Stats& s, long n) const {
    return n == 0 ? 0.0 : -s.sum * s.sum / static_cast<double>(n);
  }

  bool pure(const Stats& s, long n) const {
    const double mean = s.sum / static_cast<double>(n);
    return s.sumsq / static_cast<double>(n) - mean * mean <= 1e-14 * std::max(1.0, mean * mean);
  }

  std::vector<double> leaf(const Stats& s, long n) const { return {s.sum / static_cast<double>(n)}; }

 private:
  std::span<const double> target_;
};

template <class Policy>
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const Policy& policy, const TreeParams& params, Rng& rng)
      : x_(x), policy_(policy), params_(params), rng_(rng), features_(x.cols) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    if (samples.empty()) throw InputError("cannot grow a tree on zero samples");
    grow(samples, 0, samples.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;
  };

  int grow(std::vector<std::size_t>& samples, std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto n = static_cast<long>(end - begin);

    auto total = policy_.empty();
    for (std::size_t i = begin; i < end; ++i) policy_.add(total, samples[i]);

    const bool stop = (params_.max_depth >= 0 && depth >= params_.max_depth) ||
                      n < params_.min_samples_split || n < 2L * params_.min_samples_leaf ||
                      policy_.pure(total, n);
    if (!stop) {
      const Split split = find_split(samples, begin, end, total, n);
      if (split.found) {
        auto mid_it = std::stable_partition(
            samples.begin() + static_cast<std::ptrdiff_t>(begin), samples.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::size_t s) { return x_(s, split.feature) <= split.threshold; });
        const auto mid = static_cast<std::size_t>(mid_it - samples.begin());
        const int left = grow(samples, begin, mid, depth + 1);
        const int right = grow(samples, mid, end, depth + 1);
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(split.feature);
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return id;
      }
    }
    tree_.nodes[static_cast<std::size_t>(id)].value = policy_.leaf(total, n);
    return id;
  }

  Split find_split(const std::vector<std::size_t>& samples, std::size_t begin, std::size_t end,
                   const typename Policy::Stats& total, long n) {
    const std::size_t n_features = x_.cols;
    const bool subsample = params_.max_features > 0 && params_.max_features < n_features;
    if (subsample) std::shuffle(features_.begin(), features_.end(), rng_);
    else std::iota(features_.begin(), features_.end(), std::size_t{0});

    Split best;
    const long min_leaf = std::max(1, params_.min_samples_leaf);
    std::size_t visited = 0;
    for (std::size_t f : features_) {
      // Keep looking past max_features until some valid split exists.
      if (subsample && visited >= params_.max_features && best.found) break;
      ++visited;

      order_.clear();
      for (std::size_t i = begin; i < end; ++i) order_.emplace_back(x_(samples[i], f), samples[i]);
      std::sort(order_.begin(), order_.end());
      if (order_.front().first == order_.back().first) continue;

      auto left = policy_.empty();
      auto right = total;
      for (long i = 0; i + 1 < n; ++i) {
        policy_.add(left, order_[static_cast<std::size_t>(i)].second);
        policy_.remove(right, order_[static_cast<std::size_t>(i)].second);
        const long nl = i + 1;
        const long nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double lo = order_[static_cast<std::size_t>(i)].first;
        const double hi = order_[static_cast<std::size_t>(i + 1)].first;
        if (lo == hi) continue;
        const double score = policy_.score(left, nl) + policy_.score(right, nr);
        if (!best.found || score < best.score) {
          double thr = lo + (hi - lo) / 2.0;
          if (!(thr < hi)) thr = lo;
          best = {true, f, thr, score};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  const Policy& policy_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::size_t>> order_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree build_classification_tree(const FeatureMatrix& x, std::span<const int> labels, int n_classes,
                                       std::span<const std::size_t> sample_index, const TreeParams& params,
                                       Rng& rng) {
  if (params.criterion == SplitCriterion::squared_error)
    throw InputError("classification trees take the entropy or gini criterion");
  ClassPolicy policy(labels, n_classes, params.criterion, sample_index.size());
  TreeBuilder<ClassPolicy> builder(x, policy, params, rng);
  return builder.build({sample_index.begin(), sample_index.end()});
}

DecisionTree build_regression_tree(const FeatureMatrix& x, std::span<const double> target,
                                   std::span<const std::size_t> sample_index, const TreeParams& params,
                                   Rng& rng) {
  RegressionPolicy policy(target);
  TreeBuilder<RegressionPolicy> builder(x, policy, params, rng);
  return builder.build({sample_index.begin(), sample_index.end()});
}

}  // namespace ffd
