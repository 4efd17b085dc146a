#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ffd/core.hpp"

namespace ffd {

// Column order of the per-frame CSV.
inline constexpr std::string_view kFrameCsvHeader =
    "id,eye,condition,t,pupil_rx,pupil_ry,iris_rx,iris_ry,pupil_cx,pupil_cy,iris_cx,iris_cy,valid";

std::vector<std::string> split_csv_line(std::string_view line);

// One sequence per distinct (id, eye), in order of first appearance, frames
// sorted by t. The frame rate is inferred from the median frame spacing.
std::vector<EyeSequence> load_sequences(const std::filesystem::path& path);

void write_sequences(const std::filesystem::path& path, const std::vector<EyeSequence>& seqs);
std::string format_frame_row(const EyeSequence& seq, const FrameGeometry& f);

// Minimal header-indexed CSV table used by the manifest and label readers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name, const std::filesystem::path& source) const;
};

CsvTable read_csv(const std::filesystem::path& path, std::span<const std::string_view> required);

}  // namespace ffd
