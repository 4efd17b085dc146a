#include "ffd/pgm.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include <fmt/format.h>

#include "ffd/csv_io.hpp"
#include "ffd/error.hpp"

namespace ffd {

namespace {

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      break;
    }
    c = in.peek();
  }
  int v = -1;
  if (!(in >> v) || v <= 0) throw InputError(fmt::format("{}: malformed PGM header", path.string()));
  return v;
}

}  // namespace

LabelMask read_mask_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open mask '{}'", path.string()));
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    throw InputError(fmt::format("{}: not a binary PGM (P5) file", path.string()));
  const int w = read_header_int(in, path);
  const int h = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (maxval != 255) throw InputError(fmt::format("{}: expected maxval 255, got {}", path.string(), maxval));
  in.get();  // single whitespace before the raster

  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw InputError(fmt::format("{}: truncated raster", path.string()));

  LabelMask mask(w, h);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    switch (raw[i]) {
      case 0: mask.labels[i] = Label::background; break;
      case 128: mask.labels[i] = Label::iris; break;
      case 255: mask.labels[i] = Label::pupil; break;
      default:
        throw InputError(fmt::format("{}: pixel code {} at offset {} is not 0, 128 or 255",
                                     path.string(), raw[i], i));
    }
  }
  return mask;
}

void write_mask_pgm(const std::filesystem::path& path, const LabelMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write mask '{}'", path.string()));
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  std::vector<unsigned char> raw(mask.labels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    switch (mask.labels[i]) {
      case Label::background: raw[i] = 0; break;
      case Label::iris: raw[i] = 128; break;
      case Label::pupil: raw[i] = 255; break;
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw InputError(fmt::format("failed writing mask '{}'", path.string()));
}

std::vector<EyeSequence> localize_manifest(const std::filesystem::path& manifest, double fps) {
  static constexpr std::string_view kCols[] = {"id", "eye", "condition", "t", "mask_path"};
  const CsvTable table = read_csv(manifest, kCols);
  if (table.rows.empty()) throw SchemaError(fmt::format("{}: no data rows", manifest.string()));
  const std::size_t c_id = table.column("id", manifest), c_eye = table.column("eye", manifest),
                    c_cond = table.column("condition", manifest), c_t = table.column("t", manifest),
                    c_path = table.column("mask_path", manifest);
  const std::filesystem::path base = manifest.parent_path();

  std::vector<EyeSequence> seqs;
  std::map<std::pair<std::string, char>, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = fmt::format("{}:{}", manifest.string(), table.line_numbers[r]);
    double t = 0.0;
    const std::string& ts = row[c_t];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
    if (ec != std::errc() || ptr != ts.data() + ts.size() || t < 0)
      throw SchemaError(fmt::format("{}: bad timestamp '{}'", where, ts));
    Eye eye;
    Condition cond;
    try {
      eye = parse_eye(row[c_eye]);
      cond = parse_condition(row[c_cond]);
    } catch (const SchemaError& e) {
      throw SchemaError(fmt::format("{}: {}", where, e.what()));
    }
    std::filesystem::path mask_path = row[c_path];
    if (mask_path.is_relative()) mask_path = base / mask_path;

    FrameGeometry g = localize_eye(read_mask_pgm(mask_path));
    g.t = t;
    auto [it, inserted] = index.emplace(std::make_pair(row[c_id], eye_code(eye)), seqs.size());
    if (inserted) {
      EyeSequence s;
      s.id = row[c_id];
      s.eye = eye;
      s.condition = cond;
      seqs.push_back(std::move(s));
    }
    seqs[it->second].frames.push_back(g);
  }
  for (EyeSequence& s : seqs) {
    std::stable_sort(s.frames.begin(), s.frames.end(),
                     [](const FrameGeometry& a, const FrameGeometry& b) { return a.t < b.t; });
    if (fps > 0) s.fps = fps;
    else if (s.frames.size() >= 2) s.fps = std::round(1.0 / (s.frames[1].t - s.frames[0].t));
  }
  return seqs;
}

}  // namespace ffd
