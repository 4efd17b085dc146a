#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffd/core.hpp"

namespace ffd {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<long>> counts;

  std::size_t size() const { return classes.size(); }
  long total() const;
  long diagonal() const;
  std::size_t index_of(std::string_view name) const;

  bool operator==(const ConfusionMatrix&) const = default;
};

using LabelPair = std::pair<Condition, Condition>;  // (true, predicted)

ConfusionMatrix empty_condition_matrix();
ConfusionMatrix confusion_matrix(std::span<const LabelPair> pairs);

struct ClassMetrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::string> notes;  // 0/0 ratios reported as 0
};

// One-vs-rest reduction of the matrix for `target`.
ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t target);
std::vector<ClassMetrics> all_class_metrics(const ConfusionMatrix& cm);

// Fit = control, unfit = alcohol + drug + sleep; sums blocks of the 4x4 matrix.
ConfusionMatrix group_fit_unfit(const ConfusionMatrix& cm4);

double overall_accuracy(const ConfusionMatrix& cm);
// Mean of the per-class recall over classes that have true samples.
double mean_class_accuracy(const ConfusionMatrix& cm);
// Mean precision over classes that have true samples; 0/0 precision counts as 0.
double macro_precision(const ConfusionMatrix& cm);

}  // namespace ffd
