#pragma once

#include <cstdint>
#include <vector>

#include "ffd/core.hpp"

namespace ffd {

enum class Label : std::uint8_t { background = 0, iris = 1, pupil = 2 };

enum class Target { iris, pupil };

// Row-major label grid produced by the eye segmenter.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<Label> labels;

  LabelMask() = default;
  LabelMask(int w, int h, Label fill = Label::background);

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  Label at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, Label l) { labels[static_cast<std::size_t>(y) * width + x] = l; }
};

// The iris region is the whole iris disc, so it includes the pupil pixels.
bool is_target(Label l, Target t);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct CircleEstimate {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  double rms_error = 0.0;
  std::size_t n_points = 0;
};

// Binary region of the target, eroded with a 3x3 cross; pixels outside the
// grid count as background.
std::vector<bool> binary_region(const LabelMask& mask, Target target);
std::vector<bool> erode_cross(const std::vector<bool>& region, int width, int height);

// Region XOR erode(region): the one-pixel boundary of every component.
std::vector<Point> boundary_pixels(const LabelMask& mask, Target target);

// Algebraic (Kasa) least-squares circle.
CircleEstimate fit_circle_lsq(const std::vector<Point>& points);

struct AxisRadii {
  double rx = 0.0;
  double ry = 0.0;
};

// Half-lengths of the contiguous target runs through the centre pixel along
// its row and column.
AxisRadii axis_radii(const LabelMask& mask, Target target, Point centre);

// Fits pupil and iris, measures per-axis radii, and applies the validity
// rules. Never throws for degenerate masks; those come back with valid=false.
FrameGeometry localize_eye(const LabelMask& mask);

}  // namespace ffd
