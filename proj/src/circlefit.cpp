#include "ffd/circlefit.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

LabelMask::LabelMask(int w, int h, Label fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw InputError(fmt::format("invalid mask size {}x{}", w, h));
  labels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

bool is_target(Label l, Target t) {
  if (t == Target::pupil) return l == Label::pupil;
  return l == Label::iris || l == Label::pupil;
}

std::vector<bool> binary_region(const LabelMask& mask, Target target) {
  std::vector<bool> region(mask.labels.size());
  for (std::size_t i = 0; i < mask.labels.size(); ++i) region[i] = is_target(mask.labels[i], target);
  return region;
}

std::vector<bool> erode_cross(const std::vector<bool>& region, int width, int height) {
  std::vector<bool> out(region.size(), false);
  auto on = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < width && y < height &&
           region[static_cast<std::size_t>(y) * width + x];
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out[static_cast<std::size_t>(y) * width + x] =
          on(x, y) && on(x - 1, y) && on(x + 1, y) && on(x, y - 1) && on(x, y + 1);
  return out;
}

std::vector<Point> boundary_pixels(const LabelMask& mask, Target target) {
  const std::vector<bool> region = binary_region(mask, target);
  const std::vector<bool> eroded = erode_cross(region, mask.width, mask.height);
  std::vector<Point> pts;
  bool any = false;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * mask.width + x;
      any = any || region[i];
      if (region[i] != eroded[i]) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
  }
  if (!any)
    throw InputError(fmt::format("mask has no {} pixels", target == Target::iris ? "iris" : "pupil"));
  return pts;
}

CircleEstimate fit_circle_lsq(const std::vector<Point>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw NumericError(fmt::format("circle fit needs at least 3 points, got {}", n));

  double mx = 0.0, my = 0.0;
  for (const Point& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double spread = 0.0;
  for (const Point& p : points) spread += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  const double scale = std::sqrt(spread / static_cast<double>(n));
  if (!(scale > 0.0)) throw NumericError("circle fit on coincident points");

  // Centred and scaled so the conditioning test is independent of pixel units.
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (points[i].x - mx) / scale;
    const double v = (points[i].y - my) / scale;
    design(static_cast<Eigen::Index>(i), 0) = u;
    design(static_cast<Eigen::Index>(i), 1) = v;
    design(static_cast<Eigen::Index>(i), 2) = 1.0;
    rhs(static_cast<Eigen::Index>(i)) = -(u * u + v * v);
  }
  const Eigen::Matrix3d normal = design.transpose() * design / static_cast<double>(n);
  const Eigen::Vector3d moment = design.transpose() * rhs / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = eig.eigenvalues();
  if (!(ev(0) > 1e-10 * ev(2))) throw NumericError("circle fit is singular (collinear points)");

  const Eigen::Vector3d sol = normal.ldlt().solve(moment);
  const double uc = -sol(0) / 2.0;
  const double vc = -sol(1) / 2.0;
  const double r2 = uc * uc + vc * vc - sol(2);
  if (!(r2 > 0.0)) throw NumericError("circle fit produced a non-positive radius");

  CircleEstimate c;
  c.cx = mx + scale * uc;
  c.cy = my + scale * vc;
  c.r = scale * std::sqrt(r2);
  c.n_points = n;
  double sq = 0.0;
  for (const Point& p : points) {
    const double d = std::hypot(p.x - c.cx, p.y - c.cy) - c.r;
    sq += d * d;
  }
  c.rms_error = std::sqrt(sq / static_cast<double>(n));
  return c;
}

AxisRadii axis_radii(const LabelMask& mask, Target target, Point centre) {
  const int cx = static_cast<int>(std::lround(centre.x));
  const int cy = static_cast<int>(std::lround(centre.y));
  if (!mask.contains(cx, cy))
    throw InputError(fmt::format("centre ({}, {}) lies outside the {}x{} mask", centre.x, centre.y,
                                 mask.width, mask.height));
  if (!is_target(mask.at(cx, cy), target)) return {};

  int left = cx, right = cx, up = cy, down = cy;
  while (left - 1 >= 0 && is_target(mask.at(left - 1, cy), target)) --left;
  while (right + 1 < mask.width && is_target(mask.at(right + 1, cy), target)) ++right;
  while (up - 1 >= 0 && is_target(mask.at(cx, up - 1), target)) --up;
  while (down + 1 < mask.height && is_target(mask.at(cx, down + 1), target)) ++down;
  return {static_cast<double>(right - left + 1) / 2.0, static_cast<double>(down - up + 1) / 2.0};
}

FrameGeometry localize_eye(const LabelMask& mask) {
  FrameGeometry g;
  g.valid = false;

  bool has_iris_label = false;
  for (Label l : mask.labels) has_iris_label = has_iris_label || l == Label::iris;
  if (!has_iris_label) return g;

  CircleEstimate pupil, iris;
  try {
    pupil = fit_circle_lsq(boundary_pixels(mask, Target::pupil));
    iris = fit_circle_lsq(boundary_pixels(mask, Target::iris));
  } catch (const std::runtime_error&) {
    return g;
  }
  g.pupil_cx = pupil.cx;
  g.pupil_cy = pupil.cy;
  g.iris_cx = iris.cx;
  g.iris_cy = iris.cy;

  const Point pc{pupil.cx, pupil.cy};
  const Point ic{iris.cx, iris.cy};
  const auto inside = [&](Point p) {
    return mask.contains(static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)));
  };
  if (!inside(pc) || !inside(ic)) return g;

  const AxisRadii pr = axis_radii(mask, Target::pupil, pc);
  const AxisRadii ir = axis_radii(mask, Target::iris, ic);
  g.pupil_rx = pr.rx;
  g.pupil_ry = pr.ry;
  g.iris_rx = ir.rx;
  g.iris_ry = ir.ry;

  const bool radii_ok = ir.rx > 0 && ir.ry > 0 && pr.rx > 0 && pr.ry > 0 && pr.rx <= ir.rx &&
                        pr.ry <= ir.ry;
  const bool contained = std::hypot(pupil.cx - iris.cx, pupil.cy - iris.cy) <= iris.r;
  g.valid = radii_ok && contained;
  return g;
}

}  // namespace ffd
