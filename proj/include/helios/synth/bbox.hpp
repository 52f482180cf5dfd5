#pragma once

#include <algorithm>
#include <optional>
#include <span>

#include "helios/synth/kinematics.hpp"

namespace helios {

/// Square box in pixel-edge coordinates: covers [x_min, x_min + side) x [y_min, y_min + side).
struct BBox {
  double x_min = 0;
  double y_min = 0;
  double side = 0;

  double cx() const { return x_min + side / 2; }
  double cy() const { return y_min + side / 2; }
};

/// Clips joints into the image, drops joints below the wrist row, takes the min-max box of
/// the pixel cells they fall in, squares it about its centre and translates it back inside.
inline std::optional<BBox> bbox_from_joints(std::span<const Point2> joints, int width, int height,
                                            double wrist_y) {
  const double max_x = width - 1;
  const double max_y = height - 1;
  const double wrist_row = std::clamp(wrist_y, 0.0, max_y);
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool any = false;
  for (const Point2& p : joints) {
    const double x = std::clamp(p.x, 0.0, max_x);
    const double y = std::clamp(p.y, 0.0, max_y);
    if (y > wrist_row) continue;
    if (!any) {
      x0 = x1 = x;
      y0 = y1 = y;
      any = true;
    } else {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!any) return std::nullopt;
  const double w = x1 - x0 + 1;
  const double h = y1 - y0 + 1;
  const double side = std::min(std::max(w, h), static_cast<double>(std::min(width, height)));
  const double cx = (x0 + x1 + 1) / 2;
  const double cy = (y0 + y1 + 1) / 2;
  BBox box{cx - side / 2, cy - side / 2, side};
  box.x_min = std::clamp(box.x_min, 0.0, width - side);
  box.y_min = std::clamp(box.y_min, 0.0, height - side);
  return box;
}

}  // namespace helios
