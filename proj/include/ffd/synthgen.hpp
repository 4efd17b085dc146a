#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ffd/circlefit.hpp"
#include "ffd/core.hpp"
#include "ffd/model.hpp"
#include "ffd/random.hpp"

namespace ffd {

// Class-conditional generator parameters. The ratio follows
//   base + adapt_amplitude * (1 - exp(-t / adapt_tau)) + drift_slope * t + noise
// with per-subject offsets on base and drift.
struct ClassProfile {
  Condition condition = Condition::control;
  double base_ratio = 0.35;
  double adapt_amplitude = 0.05;
  double adapt_tau = 0.8;        // s
  double drift_slope = 0.0005;   // 1/s
  double noise_sigma = 0.01;
  double blink_rate = 0.2;       // blinks per second
  double centre_jitter_sigma = 0.15;  // px per frame
  double subject_ratio_sigma = 0.0;
  double subject_drift_sigma = 0.0;
  double eyelid_occlusion = 0.0;  // mean fraction of the iris disc hidden from the top
};

void validate(const ClassProfile& p);

inline constexpr std::size_t kNumSplits = 3;
inline constexpr std::array<Split, kNumSplits> kSplits = {Split::train, Split::validation, Split::test};

struct GeneratorConfig {
  // counts[condition][split]
  std::array<std::array<int, kNumSplits>, kNumConditions> counts{};
  double fps = kCanonicalFps;
  double duration = 10.0;
  double iris_radius_px = 30.0;
  int image_size = 128;
  double separation = 1.0;
  std::vector<Eye> eyes{Eye::right};
  std::uint64_t seed = 1;
  std::array<ClassProfile, kNumConditions> profiles{};

  int total(Split s) const;
};

// Counts, geometry and profiles; drift slopes must be ordered
// alcohol > drug > sleep > control.
void validate(const GeneratorConfig& c);

// Separation presets scale every class's base and drift gap to control.
double separation_preset(std::string_view name);

// Dataset-sized defaults: 247/247/62/69 train, 35/35/9/9 validation,
// 688/72/17/20 test; moderate separation.
GeneratorConfig default_generator_config();

// Profile with its base-ratio and drift gaps to `control` scaled by `separation`.
ClassProfile separated(const ClassProfile& p, const ClassProfile& control, double separation);

EyeSequence generate_sequence(const ClassProfile& profile, double fps, double duration, double iris_radius_px,
                              int image_size, Rng& rng);

struct SyntheticDataset {
  std::array<std::vector<EyeSequence>, kNumSplits> splits;

  const std::vector<EyeSequence>& operator[](Split s) const { return splits[static_cast<std::size_t>(s)]; }
};

// Sequence j of the whole config draws from stream (seed, j), so any subset
// can be regenerated on its own.
SyntheticDataset generate_dataset(const GeneratorConfig& config);

// Writes train.csv, validation.csv, test.csv and labels.csv.
void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& data);

nlohmann::json to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

// Iris disc (iris_rx) with its top hidden so the vertical chord equals
// iris_ry, and a pupil ellipse; invalid frames render as a closed eye.
LabelMask rasterise_frame(const FrameGeometry& f, int image_size);

// Writes masks/<id>_<eye>_<frame>.pgm plus manifest.csv; returns the row count.
std::size_t write_mask_corpus(const std::filesystem::path& dir, std::span<const EyeSequence> sequences, int image_size);

}  // namespace ffd
