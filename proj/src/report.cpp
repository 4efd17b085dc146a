#include "ffd/report.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ffd/error.hpp"
#include "ffd/feature_io.hpp"

namespace ffd {

using nlohmann::json;

namespace {

double pupil_rx(const FrameGeometry& f) { return f.pupil_rx; }
double pupil_ry(const FrameGeometry& f) { return f.pupil_ry; }
double iris_rx(const FrameGeometry& f) { return f.iris_rx; }
double iris_ry(const FrameGeometry& f) { return f.iris_ry; }
double ratio_x(const FrameGeometry& f) { return f.iris_rx > 0 ? f.pupil_rx / f.iris_rx : 0.0; }
double ratio_y(const FrameGeometry& f) { return f.iris_ry > 0 ? f.pupil_ry / f.iris_ry : 0.0; }
double pupil_origin(const FrameGeometry& f) { return std::hypot(f.pupil_cx, f.pupil_cy); }
double iris_origin(const FrameGeometry& f) { return std::hypot(f.iris_cx, f.iris_cy); }
double pupil_cx(const FrameGeometry& f) { return f.pupil_cx; }
double pupil_cy(const FrameGeometry& f) { return f.pupil_cy; }

constexpr SignalDef kSignals[] = {
    {"pupil_radius_x", pupil_rx},         {"pupil_radius_y", pupil_ry},
    {"iris_radius_x", iris_rx},           {"iris_radius_y", iris_ry},
    {"ratio_x", ratio_x},                 {"ratio_y", ratio_y},
    {"pupil_centre_distance", pupil_origin}, {"iris_centre_distance", iris_origin},
    {"pupil_centre_x", pupil_cx},         {"pupil_centre_y", pupil_cy},
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

std::span<const SignalDef> behavioural_signals() { return kSignals; }

CurveTable grand_mean_curves(std::span<const EyeSequence> sequences, const SignalDef& signal,
                             const PreprocessOptions& opts) {
  std::array<std::vector<TimeSeries>, kNumConditions> per_class;
  for (const EyeSequence& s : sequences) {
    try {
      per_class[index_of(s.condition)].push_back(prepare_signal(s, signal.signal, opts));
    } catch (const UnrecoverableSequence&) {
    }
  }
  CurveTable table;
  table.name = std::string(signal.name);
  for (Condition c : kConditions) {
    const auto& list = per_class[index_of(c)];
    if (list.empty())
      throw InputError(fmt::format("behavioural report: no usable {} sequence", to_string(c)));
    const TimeSeries mean = grand_mean(list);
    if (table.time.empty())
      for (std::size_t i = 0; i < mean.size(); ++i) table.time.push_back(mean.time_at(i));
    table.series[index_of(c)] = mean.values;
    table.sequences[index_of(c)] = list.size();
  }
  return table;
}

void write_curve_csv(const std::filesystem::path& path, const CurveTable& table) {
  std::ofstream out = open_out(path);
  out << "t";
  for (Condition c : kConditions) out << ',' << to_string(c);
  out << '\n';
  for (std::size_t i = 0; i < table.time.size(); ++i) {
    out << fmt::format("{:.6f}", table.time[i]);
    for (const auto& s : table.series) out << fmt::format(",{:.9g}", s[i]);
    out << '\n';
  }
}

double centre_dispersion(const EyeSequence& seq) {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (const FrameGeometry& f : seq.frames)
    if (f.valid) {
      sx += f.pupil_cx;
      sy += f.pupil_cy;
      ++n;
    }
  if (n == 0) return 0.0;
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double ss = 0;
  for (const FrameGeometry& f : seq.frames)
    if (f.valid) ss += (f.pupil_cx - mx) * (f.pupil_cx - mx) + (f.pupil_cy - my) * (f.pupil_cy - my);
  return std::sqrt(ss / static_cast<double>(n));
}

BehaviouralSummary behavioural_report(std::span<const EyeSequence> sequences, const Baselines* baselines,
                                      const PreprocessOptions& opts, const std::filesystem::path& out_dir) {
  if (sequences.empty()) throw InputError("behavioural report needs at least one sequence");
  std::filesystem::create_directories(out_dir);
  BehaviouralSummary summary;
  for (const SignalDef& s : behavioural_signals()) {
    summary.curves.push_back(grand_mean_curves(sequences, s, opts));
    write_curve_csv(out_dir / fmt::format("{}.csv", s.name), summary.curves.back());
  }

  std::array<double, kNumConditions> sum{};
  std::array<std::size_t, kNumConditions> count{};
  for (const EyeSequence& s : sequences) {
    sum[index_of(s.condition)] += centre_dispersion(s);
    ++count[index_of(s.condition)];
  }
  std::ofstream disp = open_out(out_dir / "dispersion.csv");
  disp << "condition,sequences,mean_centre_dispersion_px\n";
  for (Condition c : kConditions) {
    const std::size_t i = index_of(c);
    summary.mean_dispersion[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : 0.0;
    disp << fmt::format("{},{},{:.6f}\n", to_string(c), count[i], summary.mean_dispersion[i]);
  }

  if (baselines) {
    std::ofstream lines = open_out(out_dir / "baseline_lines.csv");
    lines << "condition,slope_x,intercept_x,slope_y,intercept_y,mu,sigma\n";
    for (const RepresentativeCurve& c : *baselines)
      lines << fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", to_string(c.condition),
                           c.line.direction[1], c.line.point[1], c.line.direction[2], c.line.point[2], c.mu,
                           c.sigma);
  }
  return summary;
}

json to_json(const ConfusionMatrix& cm) { return json{{"classes", cm.classes}, {"counts", cm.counts}}; }

ConfusionMatrix confusion_matrix_from_json(const json& j) {
  ConfusionMatrix cm;
  try {
    cm.classes = j.at("classes").get<std::vector<std::string>>();
    cm.counts = j.at("counts").get<std::vector<std::vector<long>>>();
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed confusion matrix: {}", e.what()));
  }
  if (cm.counts.size() != cm.classes.size()) throw SchemaError("confusion matrix is not square");
  for (const auto& row : cm.counts)
    if (row.size() != cm.classes.size()) throw SchemaError("confusion matrix is not square");
  return cm;
}

json to_json(const ClassMetrics& m) {
  return json{{"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn},
              {"tn", m.tn},
              {"sensitivity", m.sensitivity},
              {"specificity", m.specificity},
              {"f1", m.f1},
              {"accuracy", m.accuracy},
              {"notes", m.notes}};
}

std::string format_percent(double fraction) { return fmt::format("{:.1f}%", 100.0 * fraction); }

RenderedReport render_report(const ConfusionMatrix& cm4, const ConfusionMatrix& cm2, const json& metadata) {
  if (cm4.size() != kNumConditions || cm2.size() != 2)
    throw InputError("render_report expects a 4-class and a 2-class confusion matrix");
  const auto m4 = all_class_metrics(cm4);
  const auto m2 = all_class_metrics(cm2);

  RenderedReport r;
  json conditions = json::object(), groups = json::object();
  for (std::size_t i = 0; i < m4.size(); ++i) conditions[cm4.classes[i]] = to_json(m4[i]);
  for (std::size_t i = 0; i < m2.size(); ++i) groups[cm2.classes[i]] = to_json(m2[i]);
  r.json = json{{"format", "ffd-report"},
                {"version", kReportVersion},
                {"metadata", metadata},
                {"conditions", {{"confusion", to_json(cm4)},
                                {"metrics", conditions},
                                {"overall_accuracy", overall_accuracy(cm4)},
                                {"mean_class_accuracy", mean_class_accuracy(cm4)}}},
                {"fit_unfit", {{"confusion", to_json(cm2)},
                               {"metrics", groups},
                               {"overall_accuracy", overall_accuracy(cm2)},
                               {"mean_class_accuracy", mean_class_accuracy(cm2)}}}};

  auto row = [](std::string_view name, const ClassMetrics& m) {
    return fmt::format("{:<8} {:>11} {:>11} {:>8} {:>8}\n", name, format_percent(m.sensitivity),
                       format_percent(m.specificity), format_percent(m.f1), format_percent(m.accuracy));
  };
  const std::string header =
      fmt::format("{:<8} {:>11} {:>11} {:>8} {:>8}\n", "class", "sensitivity", "specificity", "f1", "accuracy");
  std::string t;
  if (metadata.contains("model")) t += fmt::format("model: {}\n", metadata["model"].get<std::string>());
  t += "\nconditions\n" + header;
  for (std::size_t i = 0; i < m4.size(); ++i) t += row(cm4.classes[i], m4[i]);
  t += fmt::format("overall accuracy {}\n", format_percent(overall_accuracy(cm4)));
  t += "\nfit/unfit\n" + header;
  for (std::size_t i = 0; i < m2.size(); ++i) t += row(cm2.classes[i], m2[i]);
  t += fmt::format("overall accuracy {}\n", format_percent(overall_accuracy(cm2)));
  t += fmt::format("mean class accuracy {}\n", format_percent(mean_class_accuracy(cm2)));
  t += "\nconfusion (rows true, columns predicted)\n";
  for (const ConfusionMatrix* cm : {&cm4, &cm2}) {
    t += fmt::format("{:<8}", "");
    for (const auto& c : cm->classes) t += fmt::format(" {:>8}", c);
    t += '\n';
    for (std::size_t i = 0; i < cm->size(); ++i) {
      t += fmt::format("{:<8}", cm->classes[i]);
      for (long v : cm->counts[i]) t += fmt::format(" {:>8}", v);
      t += '\n';
    }
  }
  r.table = std::move(t);
  return r;
}

void write_report(const std::filesystem::path& dir, const RenderedReport& report, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / (stem + ".json"), report.json);
  std::ofstream out = open_out(dir / (stem + ".txt"));
  out << report.table;
}

}  // namespace ffd
