#include "ffd/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

namespace {

constexpr double kTimeEps = 1e-9;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace

TrendLine linear_trend(const TimeSeries& series) {
  double n = 0.0, sx = 0.0, sy = 0.0, sxy = 0.0, sxx = 0.0;
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.mask[i]) continue;
    const double x = series.time_at(i);
    const double y = series.values[i];
    n += 1.0;
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  if (n < 2.0) throw UnrecoverableSequence("linear trend needs at least 2 valid samples");
  if (xmin == xmax) throw NumericError("linear trend with identical abscissae");
  const double denom = n * sxx - sx * sx;
  TrendLine line;
  line.m = (n * sxy - sx * sy) / denom;
  line.b = (sy * sxx - sx * sxy) / denom;
  return line;
}

TrendLine linear_trend_or_flat(const TimeSeries& series) {
  if (series.valid_count() < 2) return {};
  return linear_trend(series);
}

TimeSeries slice_time(const TimeSeries& series, double from, double to) {
  TimeSeries out;
  out.dt = series.dt;
  bool started = false;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.time_at(i);
    if (t < from - kTimeEps || t >= to - kTimeEps) continue;
    if (!started) {
      out.t0 = t;
      started = true;
    }
    out.values.push_back(series.values[i]);
    out.mask.push_back(series.mask[i]);
  }
  return out;
}

TrendLine starting_trend(const TimeSeries& series) {
  const TimeSeries head = slice_time(series, series.t0, series.t0 + 1.0);
  if (head.valid_count() < 2)
    throw UnrecoverableSequence("fewer than 2 valid samples in the first second");
  return linear_trend(head);
}

MovingTrend moving_trend(const TimeSeries& series, double window, double hop) {
  const double duration = series.duration();
  if (duration + kTimeEps < window)
    throw UnrecoverableSequence(
        fmt::format("sequence lasts {:.3f} s, shorter than one {:.3f} s window", duration, window));
  MovingTrend out;
  for (std::size_t k = 0;; ++k) {
    const double offset = static_cast<double>(k) * hop;
    if (offset + window > duration + kTimeEps) break;
    const double start = series.t0 + offset;
    const TimeSeries w = slice_time(series, start, start + window);
    if (w.valid_count() < 2) {
      out.slopes.push_back(0.0);
      ++out.empty_windows;
    } else {
      out.slopes.push_back(linear_trend(w).m);
    }
  }
  return out;
}

Line3D representative_line(const TimeSeries& mean_x, const TimeSeries& mean_y) {
  if (mean_x.size() != mean_y.size())
    throw InputError("representative line: x and y curves differ in length");
  return Line3D::from_trends(linear_trend(mean_x), linear_trend(mean_y));
}

double skew_distance(const Line3D& r, const Line3D& s) {
  const Vec3 n = cross(r.direction, s.direction);
  const Vec3 w = sub(s.point, r.point);
  const double nn = norm(n);
  if (nn > 1e-12) return std::abs(dot(n, w)) / nn;
  // Parallel or identical: distance from P_s to line r.
  return norm(cross(w, r.direction)) / norm(r.direction);
}

SequenceStats sequence_stats(const TimeSeries& series) {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.mask[i]) continue;
    const double v = series.values[i];
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (n == 0) throw UnrecoverableSequence("statistics of a series without valid samples");
  SequenceStats st;
  st.mean = mean;
  st.std = std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
  st.range = hi - lo;
  if (mean == 0.0) {
    st.cv = 0.0;
    st.cv_defined = false;
  } else {
    st.cv = st.std / mean;
  }
  return st;
}

double cv_to_curve(double series_mean, const RepresentativeCurve& curve) {
  if (series_mean == 0.0) return 0.0;
  return curve.sigma / series_mean;
}

std::array<double, kRatioSamples> ratio_samples(const TimeSeries& series) {
  if (series.duration() + kTimeEps < 5.0)
    throw UnrecoverableSequence(
        fmt::format("ratio samples need 5 s of signal, sequence lasts {:.3f} s", series.duration()));
  if (series.valid_count() == 0) throw UnrecoverableSequence("no valid samples for ratio sampling");
  std::array<double, kRatioSamples> out{};
  const auto n = static_cast<long>(series.size());
  for (std::size_t k = 0; k < kRatioSamples; ++k) {
    const double t = static_cast<double>(k) / 3.0;
    const long idx = std::lround(t / series.dt);
    for (long d = 0;; ++d) {
      if (idx - d >= 0 && idx - d < n && series.mask[static_cast<std::size_t>(idx - d)]) {
        out[k] = series.values[static_cast<std::size_t>(idx - d)];
        break;
      }
      if (idx + d < n && series.mask[static_cast<std::size_t>(idx + d)]) {
        out[k] = series.values[static_cast<std::size_t>(idx + d)];
        break;
      }
    }
  }
  return out;
}

RepresentativeCurve make_representative_curve(Condition condition, std::span<const TimeSeries> x_series,
                                              std::span<const TimeSeries> y_series) {
  if (x_series.empty() || y_series.empty())
    throw InputError(fmt::format("no usable sequences for condition '{}'", to_string(condition)));
  RepresentativeCurve c;
  c.condition = condition;
  c.mean_x = grand_mean(x_series);
  c.mean_y = grand_mean(y_series);
  c.line = representative_line(c.mean_x, c.mean_y);
  const SequenceStats st = sequence_stats(c.mean_x);
  c.mu = st.mean;
  c.sigma = st.std;
  return c;
}

Baselines build_baselines(std::span<const EyeSequence> sequences, const PreprocessOptions& opts) {
  std::array<std::vector<TimeSeries>, kNumConditions> xs, ys;
  for (const EyeSequence& seq : sequences) {
    try {
      TimeSeries x = prepare_ratio(seq, Axis::x, opts);
      TimeSeries y = prepare_ratio(seq, Axis::y, opts);
      xs[index_of(seq.condition)].push_back(std::move(x));
      ys[index_of(seq.condition)].push_back(std::move(y));
    } catch (const UnrecoverableSequence&) {
      continue;
    }
  }
  Baselines out;
  for (Condition c : kConditions)
    out[index_of(c)] = make_representative_curve(c, xs[index_of(c)], ys[index_of(c)]);
  return out;
}

FeatureVector build_feature_vector(const EyeSequence& seq, const Baselines& baselines,
                                   const PreprocessOptions& opts) {
  const TimeSeries x = prepare_ratio(seq, Axis::x, opts);
  const TimeSeries y = prepare_ratio(seq, Axis::y, opts);

  FeatureVector fv;
  fv.id = seq.id;
  fv.condition = seq.condition;
  fv.values.reserve(kFeatureCount);

  const TrendLine full = linear_trend(x);
  fv.values.push_back(full.m);
  fv.values.push_back(full.b);

  const TrendLine start = starting_trend(x);
  fv.values.push_back(start.m);
  fv.values.push_back(start.b);

  const MovingTrend moving = moving_trend(x);
  if (moving.slopes.size() != kMovingWindows)
    throw UnrecoverableSequence(fmt::format("sequence '{}' yields {} moving windows, expected {}", seq.id,
                                            moving.slopes.size(), kMovingWindows));
  fv.values.insert(fv.values.end(), moving.slopes.begin(), moving.slopes.end());

  const Line3D own = Line3D::from_trends(full, linear_trend(y));
  for (Condition c : kConditions) fv.values.push_back(skew_distance(own, baselines[index_of(c)].line));

  const SequenceStats st = sequence_stats(x);
  fv.values.push_back(st.mean);
  fv.values.push_back(st.std);
  fv.values.push_back(st.range);
  fv.values.push_back(st.cv);

  for (Condition c : kConditions) fv.values.push_back(cv_to_curve(st.mean, baselines[index_of(c)]));

  const auto samples = ratio_samples(x);
  fv.values.insert(fv.values.end(), samples.begin(), samples.end());

  if (fv.values.size() != kFeatureCount)
    throw std::logic_error(fmt::format("feature vector has {} slots", fv.values.size()));
  for (double v : fv.values)
    if (!std::isfinite(v))
      throw UnrecoverableSequence(fmt::format("sequence '{}' produced a non-finite feature", seq.id));
  return fv;
}

EyeFusion parse_eye_fusion(std::string_view s) {
  if (s == "average") return EyeFusion::average;
  if (s == "per_eye") return EyeFusion::per_eye;
  throw InputError(fmt::format("unknown eye fusion mode '{}' (expected average or per_eye)", s));
}

std::string_view to_string(EyeFusion f) { return f == EyeFusion::average ? "average" : "per_eye"; }

ExtractionResult extract_features(std::span<const EyeSequence> sequences, const Baselines& baselines,
                                  const PreprocessOptions& opts, EyeFusion fusion) {
  ExtractionResult out;
  std::vector<std::string> order;
  std::map<std::string, std::vector<FeatureVector>> by_id;
  for (const EyeSequence& seq : sequences) {
    FeatureVector fv;
    try {
      fv = build_feature_vector(seq, baselines, opts);
    } catch (const UnrecoverableSequence& e) {
      out.skipped.push_back(fmt::format("{}/{}: {}", seq.id, eye_code(seq.eye), e.what()));
      continue;
    } catch (const NumericError& e) {
      out.skipped.push_back(fmt::format("{}/{}: {}", seq.id, eye_code(seq.eye), e.what()));
      continue;
    }
    if (fusion == EyeFusion::per_eye) {
      fv.id = fmt::format("{}:{}", seq.id, eye_code(seq.eye));
      out.vectors.push_back(std::move(fv));
      continue;
    }
    auto [it, inserted] = by_id.try_emplace(seq.id);
    if (inserted) order.push_back(seq.id);
    if (!it->second.empty() && it->second.front().condition != fv.condition)
      throw InputError(fmt::format("eyes of '{}' carry different conditions", seq.id));
    it->second.push_back(std::move(fv));
  }
  for (const std::string& id : order) {
    const auto& group = by_id[id];
    FeatureVector fused = group.front();
    for (std::size_t g = 1; g < group.size(); ++g)
      for (std::size_t i = 0; i < kFeatureCount; ++i) fused.values[i] += group[g].values[i];
    if (group.size() > 1)
      for (double& v : fused.values) v /= static_cast<double>(group.size());
    out.vectors.push_back(std::move(fused));
  }
  return out;
}

}  // namespace ffd
