#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ffd/core.hpp"

namespace ffd {

struct TrendLine {
  double m = 0.0;  // ratio units per second
  double b = 0.0;
};

using Vec3 = std::array<double, 3>;

// A line over (t, ratio_x, ratio_y). The direction always has t-component 1.
struct Line3D {
  Vec3 point{0.0, 0.0, 0.0};
  Vec3 direction{1.0, 0.0, 0.0};

  static Line3D from_trends(const TrendLine& x, const TrendLine& y) {
    return {{0.0, x.b, y.b}, {1.0, x.m, y.m}};
  }
};

struct RepresentativeCurve {
  Condition condition = Condition::control;
  TimeSeries mean_x;
  TimeSeries mean_y;
  Line3D line;
  double mu = 0.0;
  double sigma = 0.0;
};

using Baselines = std::array<RepresentativeCurve, kNumConditions>;

// Feature layout. Slot ranges are half-open [begin, end).
inline constexpr std::size_t kFeatureCount = 50;
inline constexpr std::size_t kMovingWindows = 19;
inline constexpr std::size_t kRatioSamples = 15;

struct FeatureSlot {
  std::string_view name;
  std::size_t begin;
  std::size_t end;
};

inline constexpr std::array<FeatureSlot, 7> kFeatureLayout = {{
    {"sequence_trend", 0, 2},
    {"starting_trend", 2, 4},
    {"moving_trend_slopes", 4, 23},
    {"skew_distance_to_class_lines", 23, 27},
    {"statistics_mean_std_range_cv", 27, 31},
    {"cv_to_class_curves", 31, 35},
    {"ratio_samples_3hz", 35, 50},
}};

struct FeatureVector {
  std::string id;
  Condition condition = Condition::control;
  std::vector<double> values;
};

TrendLine linear_trend(const TimeSeries& series);

// Restriction of the series to samples with t in [from, to).
TimeSeries slice_time(const TimeSeries& series, double from, double to);

TrendLine starting_trend(const TimeSeries& series);

struct MovingTrend {
  std::vector<double> slopes;
  std::size_t empty_windows = 0;  // windows with < 2 valid samples (slope 0)
};

MovingTrend moving_trend(const TimeSeries& series, double window = 1.0, double hop = 0.5);

TrendLine linear_trend_or_flat(const TimeSeries& series);

Line3D representative_line(const TimeSeries& mean_x, const TimeSeries& mean_y);

double skew_distance(const Line3D& r, const Line3D& s);

struct SequenceStats {
  double mean = 0.0;
  double std = 0.0;
  double range = 0.0;
  double cv = 0.0;
  bool cv_defined = true;  // false when the mean is zero (cv reported as 0)
};

SequenceStats sequence_stats(const TimeSeries& series);

// curve.sigma / series_mean; 0 when the mean is zero.
double cv_to_curve(double series_mean, const RepresentativeCurve& curve);

// Values at t0 + k/3 s for k = 0..14, each from the nearest valid sample.
std::array<double, kRatioSamples> ratio_samples(const TimeSeries& series);

RepresentativeCurve make_representative_curve(Condition condition,
                                              std::span<const TimeSeries> x_series,
                                              std::span<const TimeSeries> y_series);

// Grand-mean baselines for all four conditions; sequences that fail
// preprocessing are skipped. Throws if a condition ends up empty.
Baselines build_baselines(std::span<const EyeSequence> sequences, const PreprocessOptions& opts = {});

FeatureVector build_feature_vector(const EyeSequence& seq, const Baselines& baselines,
                                   const PreprocessOptions& opts = {});

enum class EyeFusion { average, per_eye };

EyeFusion parse_eye_fusion(std::string_view s);
std::string_view to_string(EyeFusion f);

struct ExtractionResult {
  std::vector<FeatureVector> vectors;
  std::vector<std::string> skipped;  // "id/eye: reason"
};

// Feature vectors for a whole set of sequences. With EyeFusion::average the
// vectors of the two eyes of one id are averaged element-wise.
ExtractionResult extract_features(std::span<const EyeSequence> sequences, const Baselines& baselines,
                                  const PreprocessOptions& opts = {},
                                  EyeFusion fusion = EyeFusion::average);

}  // namespace ffd
