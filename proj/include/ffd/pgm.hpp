#pragma once

#include <filesystem>
#include <vector>

#include "ffd/circlefit.hpp"

namespace ffd {

// 8-bit binary PGM (P5) with codes 0 = background, 128 = iris, 255 = pupil.
LabelMask read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const LabelMask& mask);

// Reads a manifest CSV (id,eye,condition,t,mask_path), localises every mask
// and groups the frames into sequences. Relative mask paths resolve against
// the manifest's directory. fps <= 0 infers the rate from the first frame gap.
std::vector<EyeSequence> localize_manifest(const std::filesystem::path& manifest, double fps = 0.0);

}  // namespace ffd
