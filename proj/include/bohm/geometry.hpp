#pragma once

#include <cmath>

namespace bohm {

/// Axis-aligned rectangle in configuration space.
struct Rect {
  double x_min = -9.0;
  double x_max = 9.0;
  double y_min = -9.0;
  double y_max = 9.0;

  constexpr bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  constexpr double width() const { return x_max - x_min; }
  constexpr double height() const { return y_max - y_min; }
  constexpr bool valid() const { return x_max > x_min && y_max > y_min; }

  static constexpr Rect square(double half_width) {
    return {-half_width, half_width, -half_width, half_width};
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

/// One time-stamped position.
struct Sample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace bohm
