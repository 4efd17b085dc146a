#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ffd {

enum class Condition { control = 0, alcohol = 1, drug = 2, sleep = 3 };

inline constexpr std::size_t kNumConditions = 4;
inline constexpr std::array<Condition, kNumConditions> kConditions = {
    Condition::control, Condition::alcohol, Condition::drug, Condition::sleep};

enum class FitClass { fit = 0, unfit = 1 };

constexpr FitClass fit_class(Condition c) {
  return c == Condition::control ? FitClass::fit : FitClass::unfit;
}
constexpr std::size_t index_of(Condition c) { return static_cast<std::size_t>(c); }

std::string_view to_string(Condition c);
std::string_view to_string(FitClass f);
Condition parse_condition(std::string_view s);

enum class Eye { left, right, mono };

char eye_code(Eye e);
Eye parse_eye(std::string_view s);

enum class Axis { x, y };

inline constexpr double kCanonicalFps = 15.0;
inline constexpr std::size_t kCanonicalLength = 150;
inline constexpr std::size_t kDefaultMaxGap = 7;
inline constexpr double kMaxInvalidFraction = 0.30;

struct FrameGeometry {
  double t = 0.0;
  double pupil_rx = 0.0;
  double pupil_ry = 0.0;
  double iris_rx = 0.0;
  double iris_ry = 0.0;
  double pupil_cx = 0.0;
  double pupil_cy = 0.0;
  double iris_cx = 0.0;
  double iris_cy = 0.0;
  bool valid = false;

  double pupil_r(Axis a) const { return a == Axis::x ? pupil_rx : pupil_ry; }
  double iris_r(Axis a) const { return a == Axis::x ? iris_rx : iris_ry; }
};

// Checks the per-frame invariants (non-negative radii, pupil inside iris for
// valid frames). Returns an explanation when violated.
std::optional<std::string> check_frame(const FrameGeometry& f);

struct EyeSequence {
  std::string id;
  Eye eye = Eye::mono;
  Condition condition = Condition::control;
  double fps = kCanonicalFps;
  std::vector<FrameGeometry> frames;
};

// Uniformly sampled signal with a per-sample validity mask. Masked samples
// hold 0 and must never be read as data.
struct TimeSeries {
  double t0 = 0.0;
  double dt = 1.0 / kCanonicalFps;
  std::vector<double> values;
  std::vector<bool> mask;

  std::size_t size() const { return values.size(); }
  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  // Total covered time, each sample spanning one dt.
  double duration() const { return static_cast<double>(values.size()) * dt; }
  std::size_t valid_count() const;

  static TimeSeries from_values(std::vector<double> v, double t0 = 0.0,
                                double dt = 1.0 / kCanonicalFps);
};

TimeSeries ratio_series(const EyeSequence& seq, Axis axis);

// Linear fill of interior invalid runs of at most max_gap samples; edge runs
// of at most max_gap samples take the nearest valid value.
TimeSeries interpolate_gaps(const TimeSeries& series, std::size_t max_gap);

// Linear interpolation onto target_len uniform samples over [t0, t_last].
// An output sample is valid when both bracketing input samples are valid.
TimeSeries resample(const TimeSeries& series, std::size_t target_len);

TimeSeries grand_mean(std::span<const TimeSeries> series_list);

struct PreprocessOptions {
  std::size_t target_len = kCanonicalLength;
  std::size_t max_gap = kDefaultMaxGap;
  double max_invalid_fraction = kMaxInvalidFraction;
};

// ratio_series -> interpolate_gaps -> invalid-fraction check -> resample.
TimeSeries prepare_ratio(const EyeSequence& seq, Axis axis,
                         const PreprocessOptions& opts = {});

// Same chain for an arbitrary per-frame signal (used for the behavioural
// plots of raw radii and centre positions).
TimeSeries prepare_signal(const EyeSequence& seq, double (*signal)(const FrameGeometry&),
                          const PreprocessOptions& opts = {});

}  // namespace ffd
