#include "ffd/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (std::string& f : out) {
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return out;
}

std::size_t CsvTable::column(std::string_view name, const std::filesystem::path& source) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw SchemaError(fmt::format("{}: missing column '{}'", source.string(), name));
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path, std::span<const std::string_view> required) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      table.header = split_csv_line(line);
      have_header = true;
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size())
      throw SchemaError(fmt::format("{}:{}: expected {} fields, found {}", path.string(), line_no,
                                    table.header.size(), fields.size()));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw SchemaError(fmt::format("{}: empty file", path.string()));
  for (std::string_view name : required) table.column(name, path);
  return table;
}

namespace {

double parse_double(const std::string& s, std::string_view column, const std::filesystem::path& path,
                    std::size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw SchemaError(fmt::format("{}:{}: column '{}' is not a number: '{}'", path.string(), line,
                                  column, s));
  return v;
}

constexpr std::string_view kColumns[] = {"id",       "eye",      "condition", "t",        "pupil_rx",
                                         "pupil_ry", "iris_rx",  "iris_ry",   "pupil_cx", "pupil_cy",
                                         "iris_cx",  "iris_cy",  "valid"};

}  // namespace

std::vector<EyeSequence> load_sequences(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw InputError(fmt::format("sequence file '{}' does not exist", path.string()));
  const CsvTable table = read_csv(path, kColumns);
  if (table.rows.empty()) throw SchemaError(fmt::format("{}: no data rows", path.string()));

  std::size_t col[std::size(kColumns)];
  for (std::size_t i = 0; i < std::size(kColumns); ++i) col[i] = table.column(kColumns[i], path);

  std::vector<EyeSequence> seqs;
  std::map<std::pair<std::string, char>, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    auto where = [&](const std::string& msg) {
      return fmt::format("{}:{}: {}", path.string(), line, msg);
    };
    const std::string& id = row[col[0]];
    if (id.empty()) throw SchemaError(where("empty id"));
    Eye eye;
    Condition cond;
    try {
      eye = parse_eye(row[col[1]]);
      cond = parse_condition(row[col[2]]);
    } catch (const SchemaError& e) {
      throw SchemaError(where(e.what()));
    }
    FrameGeometry f;
    double* targets[] = {&f.t,       &f.pupil_rx, &f.pupil_ry, &f.iris_rx, &f.iris_ry,
                         &f.pupil_cx, &f.pupil_cy, &f.iris_cx,  &f.iris_cy};
    for (std::size_t k = 0; k < 9; ++k) *targets[k] = parse_double(row[col[3 + k]], kColumns[3 + k], path, line);
    const std::string& valid = row[col[12]];
    if (valid == "1") f.valid = true;
    else if (valid == "0") f.valid = false;
    else throw SchemaError(where(fmt::format("column 'valid' must be 0 or 1, got '{}'", valid)));
    if (auto problem = check_frame(f)) throw SchemaError(where(*problem));

    auto key = std::make_pair(id, eye_code(eye));
    auto [it, inserted] = index.emplace(key, seqs.size());
    if (inserted) {
      EyeSequence s;
      s.id = id;
      s.eye = eye;
      s.condition = cond;
      seqs.push_back(std::move(s));
    } else if (seqs[it->second].condition != cond) {
      throw SchemaError(where(fmt::format("condition changes within sequence '{}'", id)));
    }
    seqs[it->second].frames.push_back(f);
  }

  for (EyeSequence& s : seqs) {
    std::stable_sort(s.frames.begin(), s.frames.end(),
                     [](const FrameGeometry& a, const FrameGeometry& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < s.frames.size(); ++i)
      if (s.frames[i].t == s.frames[i - 1].t)
        throw SchemaError(fmt::format("{}: duplicate row for id '{}', eye {}, t={}", path.string(), s.id,
                                      eye_code(s.eye), s.frames[i].t));
    if (s.frames.size() >= 2) {
      std::vector<double> gaps;
      for (std::size_t i = 1; i < s.frames.size(); ++i) gaps.push_back(s.frames[i].t - s.frames[i - 1].t);
      std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
      // t carries few decimals, so snap near-integral rates.
      const double fps = 1.0 / gaps[gaps.size() / 2];
      const double rounded = std::round(fps);
      s.fps = std::abs(fps - rounded) < 1e-2 ? rounded : fps;
    }
  }
  return seqs;
}

std::string format_frame_row(const EyeSequence& seq, const FrameGeometry& f) {
  return fmt::format("{},{},{},{:.6f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{}", seq.id,
                     eye_code(seq.eye), to_string(seq.condition), f.t, f.pupil_rx, f.pupil_ry,
                     f.iris_rx, f.iris_ry, f.pupil_cx, f.pupil_cy, f.iris_cx, f.iris_cy,
                     f.valid ? 1 : 0);
}

void write_sequences(const std::filesystem::path& path, const std::vector<EyeSequence>& seqs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << kFrameCsvHeader << '\n';
  for (const EyeSequence& s : seqs)
    for (const FrameGeometry& f : s.frames) out << format_frame_row(s, f) << '\n';
  if (!out) throw InputError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace ffd
