// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "ffd/circlefit.hpp"
#include "ffd/error.hpp"
#include "ffd/eval.hpp"
#include "ffd/features.hpp"
#include "ffd/mlp.hpp"
#include "ffd/model_io.hpp"
#include "ffd/pgm.hpp"
#include "ffd/pipeline.hpp"
#include "ffd/report.hpp"
#include "ffd/synthgen.hpp"
#include "ffd/validation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ffd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- 1: least-squares trend

Outcome trend_criterion() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> len(5, 300);
  std::normal_distribution<double> noise(0, 0.02);
  const auto t0 = Clock::now();
  double worst_exact = 0, worst_oracle = 0;
  for (int rep = 0; rep < 1100; ++rep) {
    const bool noiseless = rep < 100;
    const double m = u(rng), b = u(rng), start = 5 * (u(rng) + 1);
    const auto n = static_cast<std::size_t>(len(rng));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = start + static_cast<double>(i) / 15.0;
      v[i] = b + m * t + (noiseless ? 0.0 : noise(rng));
    }
    TimeSeries s = TimeSeries::from_values(v, start, 1.0 / 15.0);
    if (!noiseless)
      for (std::size_t i = 0; i < n; ++i)
        if (u(rng) > 0.8 && i % 3 != 0) s.mask[i] = false, s.values[i] = 0.0;
    const TrendLine got = linear_trend(s);
    if (noiseless) {
      worst_exact = std::max({worst_exact, std::abs(got.m - m), std::abs(got.b - b)});
    } else {
      const oracle::Line ref = oracle::series_trend(s);
      worst_oracle = std::max({worst_oracle, std::abs(got.m - ref.m), std::abs(got.b - ref.b)});
    }
  }
  const double secs = seconds_since(t0);
  return {worst_exact < 1e-9 && worst_oracle < 1e-9 && secs < 1.0,
          fmt::format("noiseless max err {:.2e}, noisy vs oracle {:.2e}, {:.3f} s", worst_exact, worst_oracle, secs)};
}

// ---- 2: skew-line distance

Outcome skew_criterion() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto t0 = Clock::now();
  double worst = 0;
  int parallel = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Line3D r{{u(rng), u(rng), u(rng)}, {1, u(rng), u(rng)}};
    Line3D s{{u(rng), u(rng), u(rng)}, {1, u(rng), u(rng)}};
    if (rep % 10 == 0) {
      s.direction = r.direction;
      ++parallel;
    }
    worst = std::max(worst, std::abs(skew_distance(r, s) - oracle::nearest_approach(r, s)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && parallel >= 50 && secs < 5.0,
          fmt::format("max err {:.2e} over 1000 pairs ({} parallel), {:.3f} s", worst, parallel, secs)};
}

// ---- 3: circle fit

Outcome circle_criterion() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> radius(5, 40), centre(50, 150), phase(0, 2 * M_PI);
  std::normal_distribution<double> noise(0, 0.5);
  const auto t0 = Clock::now();
  int within = 0;
  double worst_exact = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const double r = radius(rng), cx = centre(rng), cy = centre(rng), ph = phase(rng);
    const int n = std::max(16, static_cast<int>(std::lround(2 * M_PI * r)));
    std::vector<Point> clean, noisy;
    for (int k = 0; k < n; ++k) {
      const double a = ph + 2 * M_PI * k / n;
      clean.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
      noisy.push_back({clean.back().x + noise(rng), clean.back().y + noise(rng)});
    }
    const CircleEstimate e = fit_circle_lsq(clean);
    worst_exact = std::max({worst_exact, std::abs(e.r - r), std::abs(e.cx - cx), std::abs(e.cy - cy)});
    const CircleEstimate f = fit_circle_lsq(noisy);
    within += std::abs(f.r - r) <= 0.5 && std::abs(f.cx - cx) <= 0.5 && std::abs(f.cy - cy) <= 0.5;
  }
  const double secs = seconds_since(t0);
  const double frac = within / 500.0;
  return {frac >= 0.99 && worst_exact < 1e-9 && secs < 5.0,
          fmt::format("{:.1f}% within 0.5 px, noiseless max err {:.2e}, {:.3f} s", 100 * frac, worst_exact, secs)};
}

// ---- 4: feature vector

Outcome feature_criterion() {
  GeneratorConfig c = default_generator_config();
  for (auto& row : c.counts) row = {30, 0, 10};
  const SyntheticDataset d = generate_dataset(c);
  const Baselines b = build_baselines(d[Split::train]);
  std::size_t checked = 0, bad_len = 0, nondet = 0, scale_diff = 0;
  double max_scale_diff = 0;
  for (Split sp : {Split::train, Split::test})
    for (const EyeSequence& s : d[sp]) {
      FeatureVector a;
      try {
        a = build_feature_vector(s, b);
      } catch (const UnrecoverableSequence&) {
        continue;
      }
      ++checked;
      bad_len += a.values.size() != kFeatureCount;
      nondet += build_feature_vector(s, b).values != a.values;
      EyeSequence doubled = s;
      for (FrameGeometry& f : doubled.frames) {
        f.pupil_rx *= 2;
        f.pupil_ry *= 2;
        f.iris_rx *= 2;
        f.iris_ry *= 2;
      }
      const FeatureVector z = build_feature_vector(doubled, b);
      for (std::size_t i = 0; i < a.values.size() && i < z.values.size(); ++i)
        max_scale_diff = std::max(max_scale_diff, std::abs(a.values[i] - z.values[i]));
      scale_diff += z.values != a.values;
    }
  const MovingTrend mt = moving_trend(prepare_ratio(d[Split::train][0], Axis::x));
  const std::size_t block = kFeatureLayout[2].end - kFeatureLayout[2].begin;
  const bool ok = checked > 0 && bad_len == 0 && nondet == 0 && scale_diff == 0 && mt.slopes.size() == 19 &&
                  block == 19;
  return {ok, fmt::format("{} sequences: {} wrong length, {} non-deterministic, x2 scaling max diff {:g}, "
                          "{} moving-trend windows",
                          checked, bad_len, nondet, max_scale_diff, mt.slopes.size())};
}

// ---- 5: metric formulas

struct Fraction {
  long num = 0, den = 1;
  static Fraction of(long n, long d) {
    if (d == 0) return {0, 1};
    const long g = std::gcd(n, d);
    return {n / g, d / g};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

std::vector<std::vector<long>> constructed_matrix(int k, std::mt19937_64& rng) {
  // A few fixed shapes first, then random ones with empty rows and columns mixed in.
  switch (k) {
    case 0: return {{8, 6}, {4, 82}};
    case 1: return {{70, 30}, {0, 0}};
    case 2: return {{50, 0}, {0, 50}};
    case 3: return {{0, 5}, {7, 0}};
    case 4: return {{10, 0, 0, 0}, {0, 10, 0, 0}, {0, 0, 10, 0}, {0, 0, 0, 10}};
    case 5: return {{0, 3, 0, 0}, {0, 0, 0, 0}, {1, 0, 0, 0}, {0, 0, 2, 0}};
    default: break;
  }
  std::uniform_int_distribution<long> u(0, 60);
  const std::size_t n = k % 2 == 0 ? 2 : 4;
  std::vector<std::vector<long>> m(n, std::vector<long>(n));
  for (auto& row : m)
    for (long& v : row) v = u(rng) % (k % 5 == 0 ? 3 : 61);
  if (k % 7 == 0) std::fill(m[1].begin(), m[1].end(), 0L);
  return m;
}

Outcome metric_criterion() {
  std::mt19937_64 rng(505);
  int mismatches = 0, compared = 0;
  for (int k = 0; k < 20; ++k) {
    const auto counts = constructed_matrix(k, rng);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < counts.size(); ++i) cm.classes.push_back(fmt::format("c{}", i));
    cm.counts = counts;
    long total = 0;
    for (const auto& row : counts) total += std::accumulate(row.begin(), row.end(), 0L);
    for (std::size_t t = 0; t < counts.size(); ++t) {
      const long tp = counts[t][t];
      long row = 0, col = 0;
      for (std::size_t j = 0; j < counts.size(); ++j) row += counts[t][j], col += counts[j][t];
      const long fn = row - tp, fp = col - tp, tn = total - tp - fn - fp;
      const Fraction want[] = {Fraction::of(tp, tp + fn), Fraction::of(tn, tn + fp),
                               Fraction::of(2 * tp, 2 * tp + fp + fn), Fraction::of(tp + tn, total)};
      const ClassMetrics m = class_metrics(cm, t);
      const double got[] = {m.sensitivity, m.specificity, m.f1, m.accuracy};
      for (int q = 0; q < 4; ++q) {
        ++compared;
        mismatches += got[q] != want[q].value();
      }
    }
  }
  int total_breaks = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::uniform_int_distribution<int> u(0, 50);
    std::vector<LabelPair> pairs;
    for (Condition a : kConditions)
      for (Condition p : kConditions)
        for (int n = u(rng); n > 0; --n) pairs.emplace_back(a, p);
    const ConfusionMatrix cm4 = confusion_matrix(pairs);
    const ConfusionMatrix cm2 = group_fit_unfit(cm4);
    total_breaks += cm2.total() != cm4.total() || cm4.total() != static_cast<long>(pairs.size());
  }
  return {mismatches == 0 && total_breaks == 0,
          fmt::format("{} of {} metric values differ from exact fractions; {} of 100 groupings lose counts",
                      mismatches, compared, total_breaks)};
}

// ---- 6: classifier sanity

struct EasyData {
  SplitFeatures features;
};

double accuracy(const TrainedModel& m, std::span<const FeatureVector> samples) {
  return overall_accuracy(evaluate(m, samples));
}

double mlp_gradient_error(std::span<const FeatureVector> samples) {
  const std::size_t d = samples.front().values.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (const auto& fv : samples)
    for (std::size_t j = 0; j < d; ++j) mean[j] += fv.values[j] / samples.size();
  for (const auto& fv : samples)
    for (std::size_t j = 0; j < d; ++j) sq[j] += (fv.values[j] - mean[j]) * (fv.values[j] - mean[j]) / samples.size();
  Eigen::MatrixXd in(10, static_cast<Eigen::Index>(d));
  std::vector<int> y;
  for (Eigen::Index i = 0; i < 10; ++i) {
    const FeatureVector& fv = samples[static_cast<std::size_t>(i) * samples.size() / 10];
    for (std::size_t j = 0; j < d; ++j) in(i, j) = (fv.values[j] - mean[j]) / std::max(std::sqrt(sq[j]), 1e-12);
    y.push_back(static_cast<int>(index_of(fv.condition)));
  }
  const MlpParams p = mlp_params(default_spec(Family::mlp));
  Rng rng(606);
  const MlpModel m = init_mlp(d, 4, p, rng);
  std::vector<double> grad;
  mlp_loss(m, in, y, p.alpha, &grad);
  std::vector<double> theta = flatten_parameters(m);
  MlpModel probe = m;
  double diff2 = 0, norm2 = 0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    set_parameters(probe, theta);
    const double up = mlp_loss(probe, in, y, p.alpha, nullptr);
    theta[i] = keep - h;
    set_parameters(probe, theta);
    const double down = mlp_loss(probe, in, y, p.alpha, nullptr);
    theta[i] = keep;
    const double fd = (up - down) / (2 * h);
    diff2 += (fd - grad[i]) * (fd - grad[i]);
    norm2 += std::max(fd * fd, grad[i] * grad[i]);
  }
  return std::sqrt(diff2 / norm2);
}

Outcome classifier_criterion() {
  GeneratorConfig c = default_generator_config();
  for (auto& row : c.counts) row = {500, 0, 125};
  c.separation = separation_preset("easy");
  c.seed = 66;
  const SyntheticDataset data = generate_dataset(c);
  const SplitFeatures sf = featurise(data, {}, EyeFusion::average);
  const auto& tr = sf.features[0];
  const auto& te = sf.features[2];

  // Sequences with too many blink frames are dropped by preprocessing.
  std::string detail = fmt::format("{} train / {} test generated, {} unusable;", data[Split::train].size(),
                                   data[Split::test].size(), sf.skipped);
  bool ok = data[Split::train].size() == 2000 && data[Split::test].size() == 500 && sf.skipped < 25;
  for (Family f : kFamilies) {
    const TrainedModel m = train(default_spec(f, 66), tr);
    const double acc = accuracy(m, te);
    ok = ok && acc >= 0.95;
    detail += fmt::format(" {} {:.1f}%", to_string(f), 100 * acc);
    if (f == Family::gradient_boosting) {
      const auto& dev = std::get<BoostingModel>(m.impl()).train_deviance;
      std::size_t rises = 0;
      for (std::size_t i = 1; i < dev.size(); ++i) rises += dev[i] > dev[i - 1];
      ok = ok && dev.size() == 1000 && rises == 0;
      detail += fmt::format(" (deviance {:.4f}->{:.4f}, {} rises over {} stages)", dev.front(), dev.back(), rises,
                            dev.size());
    }
  }
  const double grad_err = mlp_gradient_error(tr);
  ok = ok && grad_err < 1e-4;
  detail += fmt::format("; mlp gradient rel err {:.2e}", grad_err);
  return {ok, detail};
}

// ---- 7: paper-shaped end-to-end run

Outcome end_to_end_criterion() {
  const auto t0 = Clock::now();
  const Family families[] = {Family::gradient_boosting, Family::mlp};
  double acc[2] = {0, 0}, spec[2] = {0, 0};
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    PipelineConfig cfg = default_pipeline_config();
    cfg.seed = seed;
    cfg.generator.seed = seed;
    const SyntheticDataset data = generate_dataset(cfg.generator);
    const SplitFeatures sf = featurise(data, cfg.preprocess, cfg.eye_fusion);
    for (int k = 0; k < 2; ++k) {
      const TrainedModel m = train(model_spec(cfg, families[k]), sf.features[0]);
      const EvaluationResult r = evaluate_groups(m, sf.features[2]);
      const double a = overall_accuracy(r.cm2);
      const double s = class_metrics(r.cm4, index_of(Condition::control)).specificity;
      acc[k] += a / 3;
      spec[k] += s / 3;
      per_seed += fmt::format(" s{}:{}={:.1f}/{:.1f}", seed, families[k] == Family::mlp ? "mlp" : "gbm", 100 * a,
                              100 * s);
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = acc[0] >= 0.70 && acc[1] >= 0.70 && spec[0] >= 0.90 && spec[1] >= 0.90 && secs < 600;
  return {ok, fmt::format("fit/unfit accuracy gbm {:.1f}% mlp {:.1f}%, control specificity gbm {:.1f}% mlp "
                          "{:.1f}%, {:.0f} s;{}",
                          100 * acc[0], 100 * acc[1], 100 * spec[0], 100 * spec[1], secs, per_seed)};
}

// ---- 8: behavioural-curve structure

Outcome behaviour_criterion() {
  const SignalDef* ratio = nullptr;
  for (const SignalDef& s : behavioural_signals())
    if (s.name == "ratio_x") ratio = &s;
  int ordered = 0, steadiest = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GeneratorConfig c = default_generator_config();
    c.seed = seed;
    const SyntheticDataset d = generate_dataset(c);
    std::vector<EyeSequence> all;
    for (Split s : kSplits) all.insert(all.end(), d[s].begin(), d[s].end());
    const CurveTable t = grand_mean_curves(all, *ratio);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < t.time.size(); ++i) {
      if (t.time[i] <= 3.0) continue;
      const auto& v = t.series;
      violations += !(v[1][i] > v[2][i] && v[2][i] > v[3][i] && v[3][i] > v[0][i]);
    }
    std::array<double, kNumConditions> disp{};
    std::array<std::size_t, kNumConditions> n{};
    for (const EyeSequence& s : all) {
      disp[index_of(s.condition)] += centre_dispersion(s);
      ++n[index_of(s.condition)];
    }
    for (std::size_t k = 0; k < kNumConditions; ++k) disp[k] /= static_cast<double>(n[k]);
    const bool calm = disp[0] < disp[1] && disp[0] < disp[2] && disp[0] < disp[3];
    ordered += violations == 0;
    steadiest += calm;
    detail += fmt::format(" seed {}: {} ordering violations, dispersion {:.2f}/{:.2f}/{:.2f}/{:.2f};", seed,
                          violations, disp[0], disp[1], disp[2], disp[3]);
  }
  return {ordered == 3 && steadiest == 3,
          fmt::format("ordering held on {}/3 seeds, control steadiest on {}/3;{}", ordered, steadiest, detail)};
}

// ---- 9: round trips

Outcome round_trip_criterion() {
  GeneratorConfig c = default_generator_config();
  for (auto& row : c.counts) row = {40, 0, 0};
  c.seed = 909;
  const SyntheticDataset data = generate_dataset(c);
  const SplitFeatures sf = featurise(data, {}, EyeFusion::average);
  const auto& tr = sf.features[0];

  testutil::TempDir dir;
  std::mt19937_64 rng(9);
  std::size_t differing = 0;
  for (Family f : kFamilies) {
    ModelSpec spec = default_spec(f, 9);
    if (f != Family::mlp) spec.params["n_estimators"] = std::int64_t{100};
    const TrainedModel m = train(spec, tr);
    const auto path = dir.path() / fmt::format("{}.json", to_string(f));
    save_model(path, m);
    const TrainedModel back = load_model(path);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> x = tr[static_cast<std::size_t>(i) % tr.size()].values;
      for (double& v : x) v += 0.1 * g(rng) * (std::abs(v) + 1e-3);
      differing += m.predict_proba(x) != back.predict_proba(x);
    }
  }

  // Three sequences per condition through masks and back.
  std::vector<EyeSequence> picked;
  std::array<int, kNumConditions> taken{};
  for (const EyeSequence& s : data[Split::train])
    if (taken[index_of(s.condition)]++ < 3) picked.push_back(s);
  write_mask_corpus(dir.path() / "corpus", picked, c.image_size);
  const auto localised = localize_manifest(dir.path() / "corpus" / "manifest.csv");
  std::size_t frames = 0, close = 0, mismatched_sequences = 0;
  for (std::size_t s = 0; s < picked.size(); ++s) {
    const auto it = std::find_if(localised.begin(), localised.end(),
                                 [&](const EyeSequence& l) { return l.id == picked[s].id && l.eye == picked[s].eye; });
    if (it == localised.end() || it->frames.size() != picked[s].frames.size()) {
      ++mismatched_sequences;
      continue;
    }
    for (std::size_t i = 0; i < picked[s].frames.size(); ++i) {
      const FrameGeometry& truth = picked[s].frames[i];
      if (!truth.valid || truth.iris_ry != truth.iris_rx) continue;
      const FrameGeometry& got = it->frames[i];
      ++frames;
      close += got.valid && std::abs(got.pupil_rx - truth.pupil_rx) <= 1 && std::abs(got.pupil_ry - truth.pupil_ry) <= 1 &&
               std::abs(got.iris_rx - truth.iris_rx) <= 1 && std::abs(got.iris_ry - truth.iris_ry) <= 1;
    }
  }
  std::size_t vectors = 0;
  bool finite = true;
  for (const EyeSequence& s : localised) {
    const FeatureVector fv = build_feature_vector(s, sf.baselines);
    finite = finite && fv.values.size() == kFeatureCount &&
             std::all_of(fv.values.begin(), fv.values.end(), [](double v) { return std::isfinite(v); });
    ++vectors;
  }
  const double frac = frames ? static_cast<double>(close) / static_cast<double>(frames) : 0.0;
  const bool ok = differing == 0 && mismatched_sequences == 0 && frac >= 0.95 && finite && vectors == picked.size();
  return {ok, fmt::format("{} of 3000 reloaded predictions differ; {:.1f}% of {} unoccluded frames within 1 px; "
                          "{} localised sequences featurised",
                          differing, 100 * frac, frames, vectors)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ffd acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "Run just these criteria (1-9)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"least-squares trend", trend_criterion},
      {"skew-line distance", skew_criterion},
      {"circle fit", circle_criterion},
      {"feature vector", feature_criterion},
      {"metric formulas", metric_criterion},
      {"classifier sanity", classifier_criterion},
      {"end-to-end run", end_to_end_criterion},
      {"behavioural curves", behaviour_criterion},
      {"round trips", round_trip_criterion},
  };
  const std::set<int> wanted(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !o.pass;
    fmt::print("{} {} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail,
               seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
