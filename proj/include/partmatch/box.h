#pragma once

#include <Eigen/Core>

namespace partmatch {

// Axis-aligned pixel box (x_min, y_min, x_max, y_max).
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  static Box centered(const Eigen::Vector2d& center, double width, double height) {
    return {center.x() - 0.5 * width, center.y() - 0.5 * height, center.x() + 0.5 * width,
            center.y() + 0.5 * height};
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool well_formed() const { return x_min < x_max && y_min < y_max; }

  friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace partmatch
