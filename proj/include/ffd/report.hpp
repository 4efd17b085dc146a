#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ffd/core.hpp"
#include "ffd/eval.hpp"
#include "ffd/features.hpp"

namespace ffd {

// One plotted signal: a time column and one grand-mean column per condition.
struct CurveTable {
  std::string name;
  std::vector<double> time;
  std::array<std::vector<double>, kNumConditions> series;
  std::array<std::size_t, kNumConditions> sequences{};  // contributing sequences per condition
};

using FrameSignal = double (*)(const FrameGeometry&);

struct SignalDef {
  std::string_view name;
  FrameSignal signal;
};

// Pupil/iris radius per axis, ratio per axis, centre distance to the image
// origin and raw pupil centre coordinates.
std::span<const SignalDef> behavioural_signals();

CurveTable grand_mean_curves(std::span<const EyeSequence> sequences, const SignalDef& signal,
                             const PreprocessOptions& opts = {});

void write_curve_csv(const std::filesystem::path& path, const CurveTable& table);

// RMS distance of the valid pupil centres from their mean position, px.
double centre_dispersion(const EyeSequence& seq);

struct BehaviouralSummary {
  std::vector<CurveTable> curves;
  std::array<double, kNumConditions> mean_dispersion{};
};

// Writes <name>.csv per signal, dispersion.csv and, when given, the baseline
// trend lines. Throws if any condition has no usable sequence.
BehaviouralSummary behavioural_report(std::span<const EyeSequence> sequences, const Baselines* baselines,
                                      const PreprocessOptions& opts, const std::filesystem::path& out_dir);

inline constexpr int kReportVersion = 1;

nlohmann::json to_json(const ConfusionMatrix& cm);
ConfusionMatrix confusion_matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassMetrics& m);

struct RenderedReport {
  nlohmann::json json;
  std::string table;
};

// Per-condition rows from cm4 and fit/unfit rows from cm2, percentages with
// one decimal.
RenderedReport render_report(const ConfusionMatrix& cm4, const ConfusionMatrix& cm2,
                             const nlohmann::json& metadata = nlohmann::json::object());

// report.json and report.txt under dir.
void write_report(const std::filesystem::path& dir, const RenderedReport& report, const std::string& stem = "report");

std::string format_percent(double fraction);

}  // namespace ffd
