#pragma once

#include <algorithm>
#include <string>

#include "plate/errors.hpp"

namespace plate {

/// Axis-aligned box in pixel coordinates, corner form.
/// `score` is only meaningful on predictions; ground-truth boxes keep the
/// default 1.0.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double score = 1.0;
  std::string label = "plate";

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool valid() const {
    return x_min < x_max && y_min < y_max && score >= 0.0 && score <= 1.0;
  }

  void require_valid(const char* what = "box") const {
    if (x_min >= x_max || y_min >= y_max)
      throw DomainError(std::string(what) + ": degenerate (zero-area) box");
    if (score < 0.0 || score > 1.0)
      throw DomainError(std::string(what) + ": score outside [0,1]");
  }
};

/// Intersection over union. 0 for disjoint boxes; throws on degenerate input.
inline double iou(const BBox& a, const BBox& b) {
  a.require_valid("iou lhs");
  b.require_valid("iou rhs");
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  // Sum the areas smaller-first so iou(a,b) == iou(b,a) bit-for-bit even
  // when the compiler contracts multiply-adds into fma.
  const double area_a = a.area();
  const double area_b = b.area();
  const double lo = std::min(area_a, area_b);
  const double hi = std::max(area_a, area_b);
  return inter / (lo + hi - inter);
}

}  // namespace plate
