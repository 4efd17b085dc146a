#include "ffd/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ffd/csv_io.hpp"
#include "ffd/error.hpp"
#include "ffd/pgm.hpp"

namespace ffd {

using nlohmann::json;

void validate(const ClassProfile& p) {
  if (!(p.adapt_tau > 0)) throw InputError(fmt::format("{} profile: adapt_tau must be positive", to_string(p.condition)));
  if (p.noise_sigma < 0 || p.subject_ratio_sigma < 0 || p.subject_drift_sigma < 0 || p.centre_jitter_sigma < 0)
    throw InputError(fmt::format("{} profile: standard deviations must be non-negative", to_string(p.condition)));
  if (p.blink_rate < 0) throw InputError(fmt::format("{} profile: blink_rate must be non-negative", to_string(p.condition)));
  if (!(p.base_ratio > 0 && p.base_ratio < 1))
    throw InputError(fmt::format("{} profile: base_ratio must lie in (0, 1)", to_string(p.condition)));
  if (!(p.eyelid_occlusion >= 0 && p.eyelid_occlusion < 0.5))
    throw InputError(fmt::format("{} profile: eyelid_occlusion must lie in [0, 0.5)", to_string(p.condition)));
}

void validate(const GeneratorConfig& c) {
  for (const auto& row : c.counts)
    for (int n : row)
      if (n < 0) throw InputError("generator counts must be non-negative");
  if (c.eyes.empty()) throw InputError("generator needs at least one eye");
  if (!(c.fps > 0)) throw InputError("generator fps must be positive");
  if (!(c.separation >= 0)) throw InputError("separation must be non-negative");
  if (!(c.iris_radius_px > 0)) throw InputError("iris_radius_px must be positive");
  if (c.image_size < 16) throw InputError("image_size must be at least 16");
  if (2.0 * (1.1 * c.iris_radius_px * 1.15 + 2.0) >= c.image_size)
    throw InputError("image_size is too small for iris_radius_px");
  for (const ClassProfile& p : c.profiles) validate(p);
  const auto drift = [&](Condition k) { return c.profiles[index_of(k)].drift_slope; };
  if (!(drift(Condition::alcohol) > drift(Condition::drug) && drift(Condition::drug) > drift(Condition::sleep) &&
        drift(Condition::sleep) > drift(Condition::control)))
    throw InputError("profile drift slopes must be ordered alcohol > drug > sleep > control");
}

int GeneratorConfig::total(Split s) const {
  int t = 0;
  for (const auto& row : counts) t += row[static_cast<std::size_t>(s)];
  return t;
}

double separation_preset(std::string_view name) {
  if (name == "easy") return 4.0;
  if (name == "moderate") return 1.0;
  if (name == "hard") return 0.5;
  throw InputError(fmt::format("unknown separation preset '{}' (expected easy, moderate or hard)", name));
}

GeneratorConfig default_generator_config() {
  GeneratorConfig c;
  c.counts = {{{247, 35, 688}, {247, 35, 72}, {62, 9, 17}, {69, 9, 20}}};
  // Calibration constants: they reproduce the qualitative class structure
  // (ordering of the ratio curves, steadier control posture), not measured values.
  auto profile = [](Condition cond, double base, double tau, double drift, double noise, double blink,
                    double jitter, double occlusion, double subject_ratio, double subject_drift) {
    ClassProfile p;
    p.condition = cond;
    p.base_ratio = base;
    p.adapt_amplitude = 0.05;
    p.adapt_tau = tau;
    p.drift_slope = drift;
    p.noise_sigma = noise;
    p.blink_rate = blink;
    p.centre_jitter_sigma = jitter;
    p.subject_ratio_sigma = subject_ratio;
    p.subject_drift_sigma = subject_drift;
    p.eyelid_occlusion = occlusion;
    return p;
  };
  // Control subjects vary more between individuals; impaired ones are noisier within a recording.
  c.profiles = {profile(Condition::control, 0.350, 0.6, 0.0005, 0.010, 0.20, 0.15, 0.00, 0.035, 0.0025),
                profile(Condition::alcohol, 0.390, 1.0, 0.0040, 0.012, 0.30, 0.30, 0.00, 0.015, 0.0006),
                profile(Condition::drug, 0.380, 1.0, 0.0025, 0.012, 0.30, 0.45, 0.08, 0.015, 0.0006),
                profile(Condition::sleep, 0.366, 1.2, 0.0020, 0.012, 0.35, 0.35, 0.00, 0.015, 0.0006)};
  return c;
}

ClassProfile separated(const ClassProfile& p, const ClassProfile& control, double separation) {
  ClassProfile out = p;
  out.base_ratio = control.base_ratio + separation * (p.base_ratio - control.base_ratio);
  out.drift_slope = control.drift_slope + separation * (p.drift_slope - control.drift_slope);
  return out;
}

EyeSequence generate_sequence(const ClassProfile& profile, double fps, double duration, double iris_radius_px,
                              int image_size, Rng& rng) {
  validate(profile);
  if (duration < 5.0) throw InputError("synthetic sequences must last at least 5 s");
  if (!(fps > 0)) throw InputError("fps must be positive");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> blink_len(3, 7);

  const double scale = std::clamp(1.0 + 0.05 * gauss(rng), 0.85, 1.15);
  const double radius = iris_radius_px * scale;
  const double base = profile.base_ratio + profile.subject_ratio_sigma * gauss(rng);
  const double drift = profile.drift_slope + profile.subject_drift_sigma * gauss(rng);
  const double occlusion =
      profile.eyelid_occlusion > 0 ? std::min(0.45, profile.eyelid_occlusion * (0.5 + unit(rng))) : 0.0;

  const double margin = radius * 1.1 + 2.0;
  const double lo = margin;
  const double hi = std::max(lo, static_cast<double>(image_size - 1) - margin);
  const double mid = static_cast<double>(image_size - 1) / 2.0;
  double cx = std::clamp(mid + 2.0 * gauss(rng), lo, hi);
  double cy = std::clamp(mid + 2.0 * gauss(rng), lo, hi);
  const double offset_x = 0.5 * gauss(rng);
  const double offset_y = 0.5 * gauss(rng);

  EyeSequence seq;
  seq.fps = fps;
  const auto n = static_cast<std::size_t>(std::llround(fps * duration));
  seq.frames.reserve(n);
  int blink_left = 0;
  const double blink_p = profile.blink_rate / fps;
  for (std::size_t i = 0; i < n; ++i) {
    FrameGeometry f;
    f.t = static_cast<double>(i) / fps;

    if (i > 0) {
      cx = std::clamp(cx + profile.centre_jitter_sigma * gauss(rng), lo, hi);
      cy = std::clamp(cy + profile.centre_jitter_sigma * gauss(rng), lo, hi);
    }
    f.pupil_cx = cx;
    f.pupil_cy = cy;
    f.iris_cx = cx + offset_x;
    f.iris_cy = cy + offset_y;

    const double trend = base + profile.adapt_amplitude * (1.0 - std::exp(-f.t / profile.adapt_tau)) + drift * f.t;
    const double rx = trend + profile.noise_sigma * gauss(rng);
    const double ry = trend + profile.noise_sigma * gauss(rng);
    const double iris = radius * (1.0 + 0.003 * gauss(rng));

    if (blink_left == 0 && unit(rng) < blink_p) blink_left = blink_len(rng);
    if (blink_left > 0) {
      --blink_left;
      f.valid = false;
      seq.frames.push_back(f);
      continue;
    }
    f.iris_rx = iris;
    f.iris_ry = iris * (1.0 - occlusion);
    f.pupil_rx = std::clamp(rx * iris, 0.0, f.iris_rx);
    f.pupil_ry = std::clamp(ry * iris, 0.0, f.iris_ry);
    f.valid = f.pupil_rx > 0 && f.pupil_ry > 0;
    seq.frames.push_back(f);
  }
  return seq;
}

SyntheticDataset generate_dataset(const GeneratorConfig& config) {
  validate(config);
  const ClassProfile& control = config.profiles[index_of(Condition::control)];
  std::array<ClassProfile, kNumConditions> profiles;
  for (Condition c : kConditions) {
    profiles[index_of(c)] = separated(config.profiles[index_of(c)], control, config.separation);
    profiles[index_of(c)].condition = c;
    validate(profiles[index_of(c)]);
  }

  SyntheticDataset out;
  std::uint64_t stream = 0;
  for (Split split : kSplits) {
    const auto s = static_cast<std::size_t>(split);
    std::size_t serial = 0;
    for (Condition c : kConditions) {
      for (int k = 0; k < config.counts[index_of(c)][s]; ++k, ++stream, ++serial) {
        const std::string id = fmt::format("{}{:05d}", split == Split::train ? "tr" : split == Split::validation ? "va" : "te",
                                           serial);
        const std::uint64_t subject = derive_seed(config.seed, stream);
        for (Eye eye : config.eyes) {
          Rng eye_rng = make_rng(subject, static_cast<std::uint64_t>(eye));
          EyeSequence seq = generate_sequence(profiles[index_of(c)], config.fps, config.duration,
                                              config.iris_radius_px, config.image_size, eye_rng);
          seq.id = id;
          seq.eye = eye;
          seq.condition = c;
          out.splits[s].push_back(std::move(seq));
        }
      }
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& data) {
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.csv", std::ios::binary);
  if (!labels) throw InputError(fmt::format("cannot write into '{}'", dir.string()));
  labels << "id,eye,condition,split\n";
  for (Split split : kSplits) {
    const auto& seqs = data[split];
    write_sequences(dir / fmt::format("{}.csv", to_string(split)), seqs);
    for (const EyeSequence& s : seqs)
      labels << fmt::format("{},{},{},{}\n", s.id, eye_code(s.eye), to_string(s.condition), to_string(split));
  }
}

namespace {

json profile_to_json(const ClassProfile& p) {
  return json{{"base_ratio", p.base_ratio},
              {"adapt_amplitude", p.adapt_amplitude},
              {"adapt_tau", p.adapt_tau},
              {"drift_slope", p.drift_slope},
              {"noise_sigma", p.noise_sigma},
              {"blink_rate", p.blink_rate},
              {"centre_jitter_sigma", p.centre_jitter_sigma},
              {"subject_ratio_sigma", p.subject_ratio_sigma},
              {"subject_drift_sigma", p.subject_drift_sigma},
              {"eyelid_occlusion", p.eyelid_occlusion}};
}

void read_profile(const json& j, ClassProfile& p) {
  static constexpr std::string_view kKeys[] = {"base_ratio",          "adapt_amplitude",     "adapt_tau",
                                               "drift_slope",         "noise_sigma",         "blink_rate",
                                               "centre_jitter_sigma", "subject_ratio_sigma", "subject_drift_sigma",
                                               "eyelid_occlusion"};
  double* fields[] = {&p.base_ratio,          &p.adapt_amplitude,     &p.adapt_tau,
                      &p.drift_slope,         &p.noise_sigma,         &p.blink_rate,
                      &p.centre_jitter_sigma, &p.subject_ratio_sigma, &p.subject_drift_sigma,
                      &p.eyelid_occlusion};
  for (const auto& [key, value] : j.items()) {
    auto it = std::find(std::begin(kKeys), std::end(kKeys), key);
    if (it == std::end(kKeys)) throw InputError(fmt::format("unknown profile field '{}'", key));
    *fields[it - std::begin(kKeys)] = value.get<double>();
  }
}

}  // namespace

json to_json(const GeneratorConfig& c) {
  json counts = json::object();
  for (Split s : kSplits) {
    json row = json::object();
    for (Condition cond : kConditions)
      row[std::string(to_string(cond))] = c.counts[index_of(cond)][static_cast<std::size_t>(s)];
    counts[std::string(to_string(s))] = row;
  }
  json profiles = json::object();
  for (Condition cond : kConditions) profiles[std::string(to_string(cond))] = profile_to_json(c.profiles[index_of(cond)]);
  std::vector<std::string> eyes;
  for (Eye e : c.eyes) eyes.emplace_back(1, eye_code(e));
  return json{{"seed", c.seed},
              {"fps", c.fps},
              {"duration", c.duration},
              {"iris_radius_px", c.iris_radius_px},
              {"image_size", c.image_size},
              {"separation", c.separation},
              {"eyes", eyes},
              {"counts", counts},
              {"profiles", profiles}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c = default_generator_config();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "fps") c.fps = value.get<double>();
      else if (key == "duration") c.duration = value.get<double>();
      else if (key == "iris_radius_px") c.iris_radius_px = value.get<double>();
      else if (key == "image_size") c.image_size = value.get<int>();
      else if (key == "separation")
        c.separation = value.is_string() ? separation_preset(value.get<std::string>()) : value.get<double>();
      else if (key == "eyes") {
        c.eyes.clear();
        for (const json& e : value) c.eyes.push_back(parse_eye(e.get<std::string>()));
      } else if (key == "counts") {
        for (const auto& [split, row] : value.items()) {
          std::size_t s = kNumSplits;
          for (Split sp : kSplits)
            if (split == to_string(sp)) s = static_cast<std::size_t>(sp);
          if (s == kNumSplits) throw InputError(fmt::format("unknown split '{}' in generator counts", split));
          for (const auto& [cond, n] : row.items()) c.counts[index_of(parse_condition(cond))][s] = n.get<int>();
        }
      } else if (key == "profiles") {
        for (const auto& [cond, p] : value.items()) read_profile(p, c.profiles[index_of(parse_condition(cond))]);
      } else {
        throw InputError(fmt::format("unknown generator setting '{}'", key));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed generator config: {}", e.what()));
  }
  for (Condition cond : kConditions) c.profiles[index_of(cond)].condition = cond;
  validate(c);
  return c;
}

LabelMask rasterise_frame(const FrameGeometry& f, int image_size) {
  LabelMask mask(image_size, image_size);
  if (!f.valid) return mask;
  const double r = f.iris_rx;
  const double cut = f.iris_cy + r - 2.0 * f.iris_ry;  // rows above are under the eyelid
  for (int y = 0; y < image_size; ++y) {
    if (static_cast<double>(y) < cut) continue;
    for (int x = 0; x < image_size; ++x) {
      const double dx = x - f.iris_cx, dy = y - f.iris_cy;
      if (dx * dx + dy * dy <= r * r) mask.set(x, y, Label::iris);
      const double px = (x - f.pupil_cx) / f.pupil_rx, py = (y - f.pupil_cy) / f.pupil_ry;
      if (px * px + py * py <= 1.0) mask.set(x, y, Label::pupil);
    }
  }
  return mask;
}

std::size_t write_mask_corpus(const std::filesystem::path& dir, std::span<const EyeSequence> sequences, int image_size) {
  std::filesystem::create_directories(dir / "masks");
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw InputError(fmt::format("cannot write into '{}'", dir.string()));
  manifest << "id,eye,condition,t,mask_path\n";
  std::size_t rows = 0;
  for (const EyeSequence& s : sequences) {
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      const std::string name = fmt::format("masks/{}_{}_{:04d}.pgm", s.id, eye_code(s.eye), i);
      write_mask_pgm(dir / name, rasterise_frame(s.frames[i], image_size));
      manifest << fmt::format("{},{},{},{:.6f},{}\n", s.id, eye_code(s.eye), to_string(s.condition), s.frames[i].t, name);
      ++rows;
    }
  }
  return rows;
}

}  // namespace ffd
