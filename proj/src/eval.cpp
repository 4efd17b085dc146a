#include "ffd/eval.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long c : row) t += c;
  return t;
}

long ConfusionMatrix::diagonal() const {
  long d = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) d += counts[i][i];
  return d;
}

std::size_t ConfusionMatrix::index_of(std::string_view name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) throw InputError(fmt::format("confusion matrix has no class '{}'", name));
  return static_cast<std::size_t>(it - classes.begin());
}

ConfusionMatrix empty_condition_matrix() {
  ConfusionMatrix cm;
  for (Condition c : kConditions) cm.classes.emplace_back(to_string(c));
  cm.counts.assign(kNumConditions, std::vector<long>(kNumConditions, 0));
  return cm;
}

ConfusionMatrix confusion_matrix(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw InputError("confusion matrix of zero predictions");
  ConfusionMatrix cm = empty_condition_matrix();
  for (const auto& [truth, predicted] : pairs) ++cm.counts[ffd::index_of(truth)][ffd::index_of(predicted)];
  return cm;
}

namespace {

double ratio(long num, long den, std::string_view what, std::vector<std::string>& notes) {
  if (den == 0) {
    notes.push_back(fmt::format("{} undefined (0/0), reported as 0", what));
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t target) {
  if (target >= cm.size()) throw InputError("class index out of range");
  ClassMetrics m;
  const long total = cm.total();
  for (std::size_t j = 0; j < cm.size(); ++j) {
    if (j == target) continue;
    m.fn += cm.counts[target][j];
    m.fp += cm.counts[j][target];
  }
  m.tp = cm.counts[target][target];
  m.tn = total - m.tp - m.fn - m.fp;
  m.sensitivity = ratio(m.tp, m.tp + m.fn, "sensitivity", m.notes);
  m.specificity = ratio(m.tn, m.tn + m.fp, "specificity", m.notes);
  // TP / (TP + (FP + FN) / 2), kept in integers.
  m.f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn, "f1", m.notes);
  m.accuracy = ratio(m.tp + m.tn, total, "accuracy", m.notes);
  return m;
}

std::vector<ClassMetrics> all_class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out;
  for (std::size_t i = 0; i < cm.size(); ++i) out.push_back(class_metrics(cm, i));
  return out;
}

ConfusionMatrix group_fit_unfit(const ConfusionMatrix& cm4) {
  const ConfusionMatrix reference = empty_condition_matrix();
  if (cm4.classes != reference.classes)
    throw InputError("fit/unfit grouping needs the control, alcohol, drug, sleep matrix");
  ConfusionMatrix cm2;
  cm2.classes = {"fit", "unfit"};
  cm2.counts.assign(2, std::vector<long>(2, 0));
  for (Condition t : kConditions)
    for (Condition p : kConditions)
      cm2.counts[static_cast<std::size_t>(fit_class(t))][static_cast<std::size_t>(fit_class(p))] +=
          cm4.counts[ffd::index_of(t)][ffd::index_of(p)];
  return cm2;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const long total = cm.total();
  return total == 0 ? 0.0 : static_cast<double>(cm.diagonal()) / static_cast<double>(total);
}

double mean_class_accuracy(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    long support = 0;
    for (long c : cm.counts[i]) support += c;
    if (support == 0) continue;
    sum += static_cast<double>(cm.counts[i][i]) / static_cast<double>(support);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

double macro_precision(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    long support = 0, predicted = 0;
    for (std::size_t j = 0; j < cm.size(); ++j) {
      support += cm.counts[i][j];
      predicted += cm.counts[j][i];
    }
    if (support == 0) continue;
    sum += predicted == 0 ? 0.0 : static_cast<double>(cm.counts[i][i]) / static_cast<double>(predicted);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

}  // namespace ffd
