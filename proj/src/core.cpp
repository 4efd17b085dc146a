#include "ffd/core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::control: return "control";
    case Condition::alcohol: return "alcohol";
    case Condition::drug: return "drug";
    case Condition::sleep: return "sleep";
  }
  return "?";
}

std::string_view to_string(FitClass f) { return f == FitClass::fit ? "fit" : "unfit"; }

Condition parse_condition(std::string_view s) {
  for (Condition c : kConditions)
    if (s == to_string(c)) return c;
  throw SchemaError(fmt::format("unknown condition '{}' (expected control, alcohol, drug or sleep)", s));
}

char eye_code(Eye e) {
  switch (e) {
    case Eye::left: return 'L';
    case Eye::right: return 'R';
    case Eye::mono: return 'M';
  }
  return '?';
}

Eye parse_eye(std::string_view s) {
  if (s == "L") return Eye::left;
  if (s == "R") return Eye::right;
  if (s == "M") return Eye::mono;
  throw SchemaError(fmt::format("unknown eye code '{}' (expected L, R or M)", s));
}

std::optional<std::string> check_frame(const FrameGeometry& f) {
  if (!(f.t >= 0.0)) return "negative timestamp";
  if (f.pupil_rx < 0 || f.pupil_ry < 0 || f.iris_rx < 0 || f.iris_ry < 0)
    return "negative radius";
  if (f.valid) {
    if (!(f.iris_rx > 0 && f.iris_ry > 0)) return "valid frame with zero iris radius";
    if (f.pupil_rx > f.iris_rx || f.pupil_ry > f.iris_ry)
      return "valid frame with pupil larger than iris";
  }
  return std::nullopt;
}

std::size_t TimeSeries::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

TimeSeries TimeSeries::from_values(std::vector<double> v, double t0, double dt) {
  TimeSeries s;
  s.t0 = t0;
  s.dt = dt;
  s.mask.assign(v.size(), true);
  s.values = std::move(v);
  return s;
}

TimeSeries ratio_series(const EyeSequence& seq, Axis axis) {
  if (seq.frames.empty()) throw UnrecoverableSequence(fmt::format("sequence '{}' has no frames", seq.id));
  TimeSeries out;
  out.t0 = seq.frames.front().t;
  out.dt = 1.0 / seq.fps;
  out.values.resize(seq.frames.size(), 0.0);
  out.mask.resize(seq.frames.size(), false);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const FrameGeometry& f = seq.frames[i];
    const double iris = f.iris_r(axis);
    if (f.valid && iris > 0.0) {
      out.values[i] = f.pupil_r(axis) / iris;
      out.mask[i] = true;
    }
  }
  return out;
}

namespace {

void require_two_valid(const TimeSeries& s) {
  if (s.valid_count() < 2)
    throw UnrecoverableSequence(
        fmt::format("series has {} valid samples, at least 2 are required", s.valid_count()));
}

}  // namespace

TimeSeries interpolate_gaps(const TimeSeries& series, std::size_t max_gap) {
  require_two_valid(series);
  TimeSeries out = series;
  const std::size_t n = series.size();
  std::size_t i = 0;
  while (i < n) {
    if (series.mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !series.mask[j]) ++j;
    // invalid run [i, j)
    const std::size_t len = j - i;
    if (len <= max_gap) {
      if (i == 0) {
        for (std::size_t k = i; k < j; ++k) out.values[k] = series.values[j];
      } else if (j == n) {
        for (std::size_t k = i; k < j; ++k) out.values[k] = series.values[i - 1];
      } else {
        const double a = series.values[i - 1];
        const double b = series.values[j];
        const double span = static_cast<double>(j - (i - 1));
        for (std::size_t k = i; k < j; ++k)
          out.values[k] = a + (b - a) * (static_cast<double>(k - (i - 1)) / span);
      }
      for (std::size_t k = i; k < j; ++k) out.mask[k] = true;
    }
    i = j;
  }
  return out;
}

TimeSeries resample(const TimeSeries& series, std::size_t target_len) {
  require_two_valid(series);
  if (target_len < 2) throw InputError("resample target length must be at least 2");
  const std::size_t n = series.size();
  if (target_len == n) return series;

  TimeSeries out;
  out.t0 = series.t0;
  const double last = static_cast<double>(n - 1);
  out.dt = last * series.dt / static_cast<double>(target_len - 1);
  out.values.resize(target_len, 0.0);
  out.mask.resize(target_len, false);
  for (std::size_t i = 0; i < target_len; ++i) {
    const double p = static_cast<double>(i) * last / static_cast<double>(target_len - 1);
    auto lo = static_cast<std::size_t>(std::floor(p));
    if (lo >= n - 1) lo = n - 1;
    const double frac = p - static_cast<double>(lo);
    if (frac == 0.0) {
      out.values[i] = series.mask[lo] ? series.values[lo] : 0.0;
      out.mask[i] = series.mask[lo];
    } else if (series.mask[lo] && series.mask[lo + 1]) {
      const double a = series.values[lo];
      const double b = series.values[lo + 1];
      out.values[i] = a + (b - a) * frac;
      out.mask[i] = true;
    }
  }
  return out;
}

TimeSeries grand_mean(std::span<const TimeSeries> series_list) {
  if (series_list.empty()) throw InputError("grand mean of an empty list");
  const TimeSeries& first = series_list.front();
  const std::size_t n = first.size();
  for (const TimeSeries& s : series_list) {
    if (s.size() != n)
      throw InputError(fmt::format("grand mean length mismatch: {} vs {}", s.size(), n));
    if (std::abs(s.dt - first.dt) > 1e-9 * std::abs(first.dt))
      throw InputError(fmt::format("grand mean spacing mismatch: {} vs {}", s.dt, first.dt));
  }
  TimeSeries out;
  out.t0 = first.t0;
  out.dt = first.dt;
  out.values.assign(n, 0.0);
  out.mask.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const TimeSeries& s : series_list) {
      if (s.mask[i]) {
        sum += s.values[i];
        ++count;
      }
    }
    if (count > 0) {
      out.values[i] = sum / static_cast<double>(count);
      out.mask[i] = true;
    }
  }
  return out;
}

namespace {

TimeSeries finish_preprocess(const TimeSeries& raw, const std::string& id,
                             const PreprocessOptions& opts) {
  if (raw.valid_count() < 2)
    throw UnrecoverableSequence(fmt::format("sequence '{}' has fewer than 2 valid frames", id));
  TimeSeries filled = interpolate_gaps(raw, opts.max_gap);
  const double invalid = 1.0 - static_cast<double>(filled.valid_count()) / static_cast<double>(filled.size());
  if (invalid > opts.max_invalid_fraction)
    throw UnrecoverableSequence(fmt::format(
        "sequence '{}' keeps {:.1f}% invalid samples after gap filling (limit {:.1f}%)", id,
        100.0 * invalid, 100.0 * opts.max_invalid_fraction));
  return resample(filled, opts.target_len);
}

}  // namespace

TimeSeries prepare_ratio(const EyeSequence& seq, Axis axis, const PreprocessOptions& opts) {
  return finish_preprocess(ratio_series(seq, axis), seq.id, opts);
}

TimeSeries prepare_signal(const EyeSequence& seq, double (*signal)(const FrameGeometry&),
                          const PreprocessOptions& opts) {
  if (seq.frames.empty()) throw UnrecoverableSequence(fmt::format("sequence '{}' has no frames", seq.id));
  TimeSeries raw;
  raw.t0 = seq.frames.front().t;
  raw.dt = 1.0 / seq.fps;
  raw.values.resize(seq.frames.size(), 0.0);
  raw.mask.resize(seq.frames.size(), false);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    if (seq.frames[i].valid) {
      raw.values[i] = signal(seq.frames[i]);
      raw.mask[i] = true;
    }
  }
  return finish_preprocess(raw, seq.id, opts);
}

}  // namespace ffd
