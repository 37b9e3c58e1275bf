#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "odtk/error.hpp"

namespace odtk {

/// Circle in continuous image coordinates: pixel (i, j) covers [i, i+1) x [j, j+1).
struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

/// Axis-aligned integer box, top-left origin, covering pixels [x, x+w) x [y, y+h).
struct BoundingBox {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  std::int64_t area() const noexcept { return w > 0 && h > 0 ? w * h : 0; }
  bool valid() const noexcept { return w > 0 && h > 0; }
  bool within(std::int64_t img_w, std::int64_t img_h) const noexcept {
    return valid() && x >= 0 && y >= 0 && x + w <= img_w && y + h <= img_h;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline std::string to_string(const BoundingBox& b) {
  return "(" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," +
         std::to_string(b.h) + ")";
}

inline std::int64_t intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t x0 = std::max(a.x, b.x), x1 = std::min(a.x + a.w, b.x + b.w);
  const std::int64_t y0 = std::max(a.y, b.y), y1 = std::min(a.y + a.h, b.y + b.h);
  return (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0;
}

/// Rounds a real-valued extent outward to whole pixels and clips it to the image.
/// Values within 1e-9 of an integer snap to it before rounding.
inline BoundingBox extent_to_box(double x0, double y0, double x1, double y1, std::int64_t img_w,
                                 std::int64_t img_h) {
  constexpr double snap = 1e-9;
  const auto lo = [](double v) { return std::int64_t(std::floor(v + snap)); };
  const auto hi = [](double v) { return std::int64_t(std::ceil(v - snap)); };
  const std::int64_t bx0 = std::max<std::int64_t>(0, lo(x0));
  const std::int64_t by0 = std::max<std::int64_t>(0, lo(y0));
  const std::int64_t bx1 = std::min<std::int64_t>(img_w, hi(x1));
  const std::int64_t by1 = std::min<std::int64_t>(img_h, hi(y1));
  if (bx1 <= bx0 || by1 <= by0) fail(ErrorCode::OutOfBounds, "box lies entirely outside the image");
  return {bx0, by0, bx1 - bx0, by1 - by0};
}

/// Square of side 2*expansion*r centred on the circle, rounded outward and
/// clipped to [0,img_w) x [0,img_h).
inline BoundingBox circle_to_bbox(const Circle& c, double expansion, std::int64_t img_w, std::int64_t img_h) {
  if (!(expansion >= 1.0)) fail(ErrorCode::InvalidArgument, "expansion must be >= 1");
  if (!(c.r > 0.0)) fail(ErrorCode::InvalidArgument, "circle radius must be positive");
  const double half = expansion * c.r;
  return extent_to_box(c.cx - half, c.cy - half, c.cx + half, c.cy + half, img_w, img_h);
}

/// Whether a box and a circle share any area.
inline bool box_intersects_circle(const BoundingBox& b, const Circle& c) {
  const double nx = std::clamp(c.cx, double(b.x), double(b.x + b.w));
  const double ny = std::clamp(c.cy, double(b.y), double(b.y + b.h));
  const double dx = nx - c.cx, dy = ny - c.cy;
  return dx * dx + dy * dy < c.r * c.r;
}

}  // namespace odtk
