#pragma once

#include <algorithm>

namespace cptrack {

// Axis-aligned box in pixel coordinates, top-left anchored.
struct Box {
  double left = 0;
  double top = 0;
  double width = 0;
  double height = 0;

  double cx() const { return left + width / 2; }
  double cy() const { return top + height / 2; }
  double area() const { return width * height; }

  bool operator==(const Box&) const = default;
};

// Intersection area over union area; 0 for disjoint boxes.
inline double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.left + a.width, b.left + b.width) -
                                      std::max(a.left, b.left));
  const double iy = std::max(0.0, std::min(a.top + a.height, b.top + b.height) -
                                      std::max(a.top, b.top));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline Box interpolate(const Box& a, const Box& b, double t) {
  const double cx = a.cx() + (b.cx() - a.cx()) * t;
  const double cy = a.cy() + (b.cy() - a.cy()) * t;
  const double w = a.width + (b.width - a.width) * t;
  const double h = a.height + (b.height - a.height) * t;
  return Box{cx - w / 2, cy - h / 2, w, h};
}

}  // namespace cptrack
