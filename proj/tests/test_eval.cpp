#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "ffd/error.hpp"
#include "ffd/eval.hpp"
#include "ffd/feature_io.hpp"
#include "ffd/report.hpp"
#include "test_util.hpp"

using namespace ffd;

namespace {

// Two-class matrix with class "a" as the positive class.
ConfusionMatrix binary(long tp, long fp, long fn, long tn) {
  return ConfusionMatrix{{"a", "b"}, {{tp, fn}, {fp, tn}}};
}

ConfusionMatrix random_cm4(std::mt19937_64& rng, long max_count = 40) {
  std::uniform_int_distribution<long> u(0, max_count);
  std::vector<LabelPair> pairs;
  for (Condition t : kConditions)
    for (Condition p : kConditions)
      for (long n = u(rng); n > 0; --n) pairs.emplace_back(t, p);
  if (pairs.empty()) pairs.emplace_back(Condition::control, Condition::control);
  return confusion_matrix(pairs);
}

const SignalDef& signal_named(std::string_view name) {
  for (const SignalDef& s : behavioural_signals())
    if (s.name == name) return s;
  throw std::runtime_error("no signal");
}

}  // namespace

TEST(Confusion, DiagonalWhenAllCorrect) {
  std::vector<LabelPair> pairs;
  for (Condition c : kConditions)
    for (int i = 0; i < 10; ++i) pairs.emplace_back(c, c);
  const ConfusionMatrix cm = confusion_matrix(pairs);
  ASSERT_EQ(cm.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(cm.counts[i][j], i == j ? 10 : 0);
  EXPECT_EQ(cm.total(), 40);
  EXPECT_EQ(cm.diagonal(), 40);
}

TEST(Confusion, SingleOffDiagonalPair) {
  const std::vector<LabelPair> pairs{{Condition::control, Condition::alcohol}};
  const ConfusionMatrix cm = confusion_matrix(pairs);
  EXPECT_EQ(cm.counts[cm.index_of("control")][cm.index_of("alcohol")], 1);
  EXPECT_EQ(cm.total(), 1);
  EXPECT_EQ(cm.diagonal(), 0);
}

TEST(Confusion, OrderIndependentAndCountsPairs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<LabelPair> pairs;
  for (int i = 0; i < 500; ++i) pairs.emplace_back(kConditions[pick(rng)], kConditions[pick(rng)]);
  const ConfusionMatrix a = confusion_matrix(pairs);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  EXPECT_EQ(confusion_matrix(pairs), a);
  EXPECT_EQ(a.total(), 500);
  EXPECT_THROW(confusion_matrix(std::vector<LabelPair>{}), InputError);
  EXPECT_THROW(a.index_of("tired"), InputError);
}

TEST(Metrics, SensitivityFromCounts) {
  const ClassMetrics m = class_metrics(binary(70, 0, 30, 0), 0);
  EXPECT_DOUBLE_EQ(m.sensitivity, 0.70);
  // TN + FP = 0, so specificity is 0/0.
  EXPECT_EQ(m.specificity, 0.0);
  EXPECT_FALSE(m.notes.empty());
}

TEST(Metrics, PerfectTwoClass) {
  for (std::size_t t : {0u, 1u}) {
    const ClassMetrics m = class_metrics(ConfusionMatrix{{"a", "b"}, {{50, 0}, {0, 50}}}, t);
    EXPECT_EQ(m.sensitivity, 1.0);
    EXPECT_EQ(m.specificity, 1.0);
    EXPECT_EQ(m.f1, 1.0);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_TRUE(m.notes.empty());
  }
}

TEST(Metrics, HandWorkedExample) {
  const ClassMetrics m = class_metrics(binary(8, 4, 6, 82), 0);
  EXPECT_EQ(m.tp, 8);
  EXPECT_EQ(m.fp, 4);
  EXPECT_EQ(m.fn, 6);
  EXPECT_EQ(m.tn, 82);
  EXPECT_NEAR(m.f1, 8.0 / 13.0, 1e-15);
  EXPECT_NEAR(m.accuracy, 0.90, 1e-15);
  EXPECT_NEAR(m.sensitivity, 8.0 / 14.0, 1e-15);
  EXPECT_NEAR(m.specificity, 82.0 / 86.0, 1e-15);
}

TEST(Metrics, OneVsRestReduction) {
  // rows true, columns predicted: control, alcohol, drug, sleep
  const ConfusionMatrix cm{{"control", "alcohol", "drug", "sleep"},
                           {{50, 3, 1, 2}, {4, 20, 0, 1}, {0, 2, 9, 1}, {5, 0, 0, 12}}};
  const ClassMetrics d = class_metrics(cm, 2);
  EXPECT_EQ(d.tp, 9);
  EXPECT_EQ(d.fn, 3);
  EXPECT_EQ(d.fp, 1);
  EXPECT_EQ(d.tn, 110 - 13);
  EXPECT_THROW(class_metrics(cm, 4), InputError);
}

TEST(Metrics, AlwaysInUnitInterval) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    const ConfusionMatrix cm = random_cm4(rng, rep % 3 == 0 ? 2 : 30);
    for (const ClassMetrics& m : all_class_metrics(cm)) {
      for (double v : {m.sensitivity, m.specificity, m.f1, m.accuracy}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_EQ(m.tp + m.fp + m.fn + m.tn, cm.total());
    }
    for (double v : {overall_accuracy(cm), mean_class_accuracy(cm), macro_precision(cm)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, MeanClassAccuracySkipsAbsentClasses) {
  const ConfusionMatrix cm{{"a", "b", "c"}, {{3, 1, 0}, {0, 0, 0}, {1, 0, 1}}};
  EXPECT_DOUBLE_EQ(mean_class_accuracy(cm), (0.75 + 0.5) / 2);
  // precision: a = 3/4, c = 1/1; b has no true samples
  EXPECT_DOUBLE_EQ(macro_precision(cm), (0.75 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(overall_accuracy(cm), 4.0 / 6.0);
}

TEST(Grouping, DiagonalStaysDiagonal) {
  const ConfusionMatrix cm{{"control", "alcohol", "drug", "sleep"},
                           {{7, 0, 0, 0}, {0, 5, 0, 0}, {0, 0, 3, 0}, {0, 0, 0, 2}}};
  const ConfusionMatrix g = group_fit_unfit(cm);
  EXPECT_EQ(g.classes, (std::vector<std::string>{"fit", "unfit"}));
  EXPECT_EQ(g.counts, (std::vector<std::vector<long>>{{7, 0}, {0, 10}}));
}

TEST(Grouping, WithinUnfitConfusionCountsAsCorrect) {
  const std::vector<LabelPair> pairs{{Condition::drug, Condition::sleep}};
  const ConfusionMatrix g = group_fit_unfit(confusion_matrix(pairs));
  EXPECT_EQ(g.counts[1][1], 1);
  EXPECT_EQ(g.diagonal(), 1);
}

TEST(Grouping, PreservesTotalAndBlockSums) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const ConfusionMatrix cm = random_cm4(rng);
    const ConfusionMatrix g = group_fit_unfit(cm);
    EXPECT_EQ(g.total(), cm.total());
    long uu = 0;
    for (std::size_t i = 1; i < 4; ++i)
      for (std::size_t j = 1; j < 4; ++j) uu += cm.counts[i][j];
    EXPECT_EQ(g.counts[0][0], cm.counts[0][0]);
    EXPECT_EQ(g.counts[1][1], uu);
    EXPECT_DOUBLE_EQ(overall_accuracy(g), static_cast<double>(g.diagonal()) / static_cast<double>(g.total()));
  }
  EXPECT_THROW(group_fit_unfit(binary(1, 1, 1, 1)), InputError);
}

TEST(Grouping, FitSensitivityIsUnfitSpecificity) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    const ConfusionMatrix g = group_fit_unfit(random_cm4(rng));
    const ClassMetrics fit = class_metrics(g, 0), unfit = class_metrics(g, 1);
    EXPECT_EQ(fit.sensitivity, unfit.specificity);
    EXPECT_EQ(fit.specificity, unfit.sensitivity);
    EXPECT_EQ(fit.accuracy, unfit.accuracy);
  }
}

// ---- report rendering

TEST(Report, PerfectClassifierShowsHundredPercent) {
  std::vector<LabelPair> pairs;
  for (Condition c : kConditions)
    for (int i = 0; i < 5; ++i) pairs.emplace_back(c, c);
  const ConfusionMatrix cm4 = confusion_matrix(pairs);
  const RenderedReport r = render_report(cm4, group_fit_unfit(cm4), {{"model", "random_forest"}});

  std::istringstream in(r.table);
  std::string line;
  std::size_t metric_rows = 0;
  while (std::getline(in, line)) {
    if (line.find('%') == std::string::npos) continue;
    if (line.rfind("overall", 0) == 0 || line.rfind("mean", 0) == 0) {
      EXPECT_NE(line.find("100.0%"), std::string::npos) << line;
      continue;
    }
    ++metric_rows;
    std::size_t hits = 0;
    for (std::size_t p = line.find("100.0%"); p != std::string::npos; p = line.find("100.0%", p + 1)) ++hits;
    EXPECT_EQ(hits, 4u) << line;
  }
  EXPECT_EQ(metric_rows, 6u);
  EXPECT_EQ(format_percent(0.7254), "72.5%");
}

TEST(Report, JsonRoundTripsExactly) {
  std::mt19937_64 rng(2);
  const ConfusionMatrix cm4 = random_cm4(rng);
  const RenderedReport r = render_report(cm4, group_fit_unfit(cm4), {{"seed", 4}});
  testutil::TempDir dir;
  write_report(dir.path(), r);
  const std::string text = testutil::read_text(dir.path() / "report.json");
  const nlohmann::json parsed = nlohmann::json::parse(text);
  EXPECT_EQ(parsed, r.json);
  EXPECT_EQ(parsed.dump(2) + "\n", text);
  EXPECT_EQ(parsed["format"], "ffd-report");
  EXPECT_EQ(confusion_matrix_from_json(parsed["conditions"]["confusion"]), cm4);
  EXPECT_EQ(testutil::read_text(dir.path() / "report.txt"), r.table);
}

TEST(Report, RejectsMismatchedMatrices) {
  const ConfusionMatrix cm2 = binary(1, 2, 3, 4);
  EXPECT_THROW(render_report(cm2, cm2), InputError);
}

// ---- behavioural curves

TEST(Behavioural, GrandMeansAreHandMeans) {
  std::vector<EyeSequence> seqs;
  for (Condition c : kConditions)
    for (int k = 0; k < 2; ++k) {
      const double a = 0.3 + 0.02 * static_cast<double>(index_of(c)) + 0.01 * k;
      const double b = 0.001 * (k + 1);
      EyeSequence s = testutil::ratio_sequence([=](double t) { return a + b * t; }, [=](double) { return a; });
      s.condition = c;
      s.id = fmt::format("{}{}", to_string(c), k);
      seqs.push_back(std::move(s));
    }
  const CurveTable t = grand_mean_curves(seqs, signal_named("ratio_x"));
  ASSERT_EQ(t.time.size(), 150u);
  for (Condition c : kConditions) {
    EXPECT_EQ(t.sequences[index_of(c)], 2u);
    const double a = 0.3 + 0.02 * static_cast<double>(index_of(c));
    for (std::size_t i = 0; i < t.time.size(); ++i) {
      const double ti = static_cast<double>(i) / 15.0;
      const double hand = ((a + 0.001 * ti) + (a + 0.01 + 0.002 * ti)) / 2;
      EXPECT_NEAR(t.series[index_of(c)][i], hand, 1e-12);
    }
  }
  const CurveTable radius = grand_mean_curves(seqs, signal_named("pupil_radius_y"));
  EXPECT_NEAR(radius.series[0][10], 50 * 0.305, 1e-9);
}

TEST(Behavioural, CentreDistanceIsEuclideanFromOrigin) {
  std::vector<EyeSequence> seqs;
  for (Condition c : kConditions) {
    EyeSequence s = testutil::ratio_sequence([](double) { return 0.4; }, [](double) { return 0.4; });
    for (FrameGeometry& f : s.frames) {
      f.pupil_cx = 3;
      f.pupil_cy = 4;
      f.iris_cx = 6;
      f.iris_cy = 8;
    }
    s.condition = c;
    seqs.push_back(std::move(s));
  }
  const CurveTable p = grand_mean_curves(seqs, signal_named("pupil_centre_distance"));
  const CurveTable q = grand_mean_curves(seqs, signal_named("iris_centre_distance"));
  for (const auto& series : p.series)
    for (double v : series) EXPECT_DOUBLE_EQ(v, 5.0);
  for (const auto& series : q.series)
    for (double v : series) EXPECT_DOUBLE_EQ(v, 10.0);
  EXPECT_DOUBLE_EQ(centre_dispersion(seqs[0]), 0.0);
}

TEST(Behavioural, DispersionIsRmsDistanceFromMean) {
  EyeSequence s = testutil::ratio_sequence([](double) { return 0.4; }, [](double) { return 0.4; }, 4);
  const double xs[] = {0, 2, 0, 2}, ys[] = {0, 0, 2, 2};
  for (std::size_t i = 0; i < 4; ++i) s.frames[i].pupil_cx = xs[i], s.frames[i].pupil_cy = ys[i];
  EXPECT_NEAR(centre_dispersion(s), std::sqrt(2.0), 1e-15);
  s.frames[3].valid = false;
  s.frames[3].pupil_cx = 100;
  // mean of the three valid centres is (2/3, 2/3)
  const double d2 = (4.0 / 9 + 4.0 / 9) + (16.0 / 9 + 4.0 / 9) + (4.0 / 9 + 16.0 / 9);
  EXPECT_NEAR(centre_dispersion(s), std::sqrt(d2 / 3), 1e-15);
}

TEST(Behavioural, ReportWritesOneFilePerSignal) {
  std::vector<EyeSequence> seqs;
  for (Condition c : kConditions) {
    EyeSequence s = testutil::ratio_sequence([](double) { return 0.4; }, [](double) { return 0.4; });
    s.condition = c;
    seqs.push_back(std::move(s));
  }
  testutil::TempDir dir;
  const BehaviouralSummary sum = behavioural_report(seqs, nullptr, {}, dir.path());
  EXPECT_EQ(sum.curves.size(), behavioural_signals().size());
  for (const SignalDef& s : behavioural_signals()) {
    const std::string csv = testutil::read_text(dir.path() / (std::string(s.name) + ".csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,control,alcohol,drug,sleep") << s.name;
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 151) << s.name;
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "dispersion.csv"));

  seqs.pop_back();
  EXPECT_THROW(behavioural_report(seqs, nullptr, {}, dir.path()), InputError);
}
